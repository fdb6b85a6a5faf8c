#pragma once

#include <stdexcept>
#include <string>

namespace docparse_eval {

// Problems with user-supplied inputs (files, flags, annotations). The CLI maps
// these to exit status 1; anything else escaping is an internal error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public InputError {
 public:
  SchemaError(std::string page_id, std::string block_id, std::string field, const std::string& message)
      : InputError(format(page_id, block_id, field, message)),
        page_id_(std::move(page_id)),
        block_id_(std::move(block_id)),
        field_(std::move(field)) {}

  const std::string& page_id() const noexcept { return page_id_; }
  const std::string& block_id() const noexcept { return block_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& page_id, const std::string& block_id, const std::string& field,
                            const std::string& message) {
    std::string where;
    if (!page_id.empty()) where += "page '" + page_id + "'";
    if (!block_id.empty()) where += (where.empty() ? "" : ", ") + std::string("block '") + block_id + "'";
    if (!field.empty()) where += (where.empty() ? "" : ", ") + std::string("field '") + field + "'";
    return where.empty() ? message : where + ": " + message;
  }

  std::string page_id_;
  std::string block_id_;
  std::string field_;
};

}  // namespace docparse_eval
