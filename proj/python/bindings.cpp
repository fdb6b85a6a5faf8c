#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/cli.hpp"
#include "docparse_eval/errors.hpp"
#include "docparse_eval/layout_eval.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/md_extract.hpp"
#include "docparse_eval/metrics.hpp"
#include "docparse_eval/pipeline.hpp"
#include "docparse_eval/reporter.hpp"

namespace py = pybind11;
namespace de = docparse_eval;

namespace {

py::dict page_scores_dict(const de::PageScores& s) {
  py::dict d;
  d["page_id"] = s.page_id;
  auto put = [&](const char* k, const std::optional<double>& v) { d[k] = v ? py::cast(*v) : py::none(); };
  put("text_edit", s.text_edit);
  put("formula_edit", s.formula_edit);
  put("formula_bleu", s.formula_bleu);
  put("formula_cdm", s.formula_cdm);
  put("table_teds", s.table_teds);
  put("table_edit", s.table_edit);
  put("read_order_edit", s.read_order_edit);
  return d;
}

std::vector<de::MatchUnit> units(const std::vector<std::string>& texts, const char* prefix) {
  std::vector<de::MatchUnit> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({prefix + std::to_string(i), texts[i], i});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Document-parsing evaluation: extraction, matching, metrics and reports";

  py::register_exception<de::InputError>(m, "InputError", PyExc_ValueError);

  m.def("levenshtein", py::overload_cast<std::string_view, std::string_view>(&de::levenshtein), py::arg("a"),
        py::arg("b"));
  m.def("normalized_edit_distance",
        py::overload_cast<std::string_view, std::string_view>(&de::normalized_edit_distance), py::arg("a"),
        py::arg("b"));
  m.def("teds", py::overload_cast<std::string_view, std::string_view>(&de::teds), py::arg("gt_html"),
        py::arg("pred_html"));
  m.def("bleu", &de::bleu, py::arg("reference"), py::arg("hypothesis"));
  m.def("tokenize_latex", &de::tokenize_latex, py::arg("latex"));
  m.def("order_distance", &de::order_distance, py::arg("expected"), py::arg("observed"));
  m.def("canonical_table", [](std::string_view html) { return de::serialize_table(de::parse_html_table(html)); },
        py::arg("html"));

  m.def("preprocess", &de::preprocess, py::arg("markdown"), py::arg("repeat_cap") = de::kDefaultRepeatCap);
  m.def("normalize_text", &de::normalize_text, py::arg("text"));
  m.def(
      "extract_elements",
      [](std::string_view markdown, std::size_t repeat_cap) {
        const de::ExtractedDoc doc = de::extract_elements(de::preprocess(markdown, repeat_cap));
        py::list elements;
        for (const auto& e : doc.elements) {
          py::dict d;
          d["kind"] = std::string(de::to_string(e.kind));
          d["content"] = e.content;
          d["start"] = e.span.start;
          d["end"] = e.span.end;
          elements.append(d);
        }
        py::dict out;
        out["elements"] = elements;
        out["warnings"] = doc.warnings;
        return out;
      },
      py::arg("markdown"), py::arg("repeat_cap") = de::kDefaultRepeatCap);

  m.def(
      "match_paragraphs",
      [](const std::vector<std::string>& gt, const std::vector<std::string>& pred, double threshold, double ratio) {
        const de::MatchResult r = de::adjacency_search_match(units(gt, "g"), units(pred, "p"), {threshold, ratio});
        py::list pairs;
        for (const auto& p : r.pairs) pairs.append(py::make_tuple(p.gt, p.pred, p.distance));
        py::dict out;
        out["pairs"] = pairs;
        out["unmatched_gt"] = r.unmatched_gt;
        out["unmatched_pred"] = r.unmatched_pred;
        out["cost"] = de::match_cost(r);
        return out;
      },
      py::arg("gt"), py::arg("pred"), py::arg("similarity_threshold") = 0.7, py::arg("containment_ratio") = 0.9);

  py::class_<de::Dataset>(m, "Dataset")
      .def_static("load", [](const std::string& path) { return de::load_dataset(path); }, py::arg("path"))
      .def_static("from_json", [](std::string_view text) {
        de::Dataset ds = de::parse_dataset_text(text);
        const auto report = de::validate(ds);
        for (const auto& f : report.findings) {
          if (f.severity == de::Severity::error) throw de::SchemaError(f.page_id, f.block_id, f.field, f.message);
        }
        return ds;
      })
      .def("__len__", [](const de::Dataset& d) { return d.pages.size(); })
      .def("page_ids",
           [](const de::Dataset& d) {
             std::vector<std::string> ids;
             for (const auto& p : d.pages) ids.push_back(p.page_id);
             return ids;
           })
      .def("page_markdown",
           [](const de::Dataset& d, const std::string& page_id) {
             const auto* p = d.find_page(page_id);
             if (!p) throw de::InputError("unknown page_id '" + page_id + "'");
             return de::gt_page_to_markdown(*p);
           })
      .def("stats_json", [](const de::Dataset& d) { return de::to_json(de::dataset_stats(d)).dump(); })
      .def(
          "evaluate_page",
          [](const de::Dataset& d, const std::string& page_id, std::optional<std::string> markdown) {
            const auto* p = d.find_page(page_id);
            if (!p) throw de::InputError("unknown page_id '" + page_id + "'");
            de::PageEvaluation ev;
            {
              py::gil_scoped_release release;
              ev = de::evaluate_page(*p, markdown);
            }
            py::dict out = page_scores_dict(ev.scores);
            out["warnings"] = ev.warnings;
            return out;
          },
          py::arg("page_id"), py::arg("markdown"))
      .def(
          "evaluate_layout_json",
          [](const de::Dataset& d, std::string_view detections) {
            return de::to_json(de::evaluate_map(d, de::parse_detections(detections))).dump();
          },
          py::arg("detections"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"docparse-eval"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = de::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
