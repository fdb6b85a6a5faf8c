#pragma once

#include <string>

#ifndef DOCPARSE_EVAL_FIXTURE_DIR
#error "DOCPARSE_EVAL_FIXTURE_DIR must be defined"
#endif

inline std::string fixture_path(const std::string& name) { return std::string(DOCPARSE_EVAL_FIXTURE_DIR) + "/" + name; }
