#pragma once

// Scoring functions: normalized edit distance, TEDS over HTML table trees,
// BLEU-4 for LaTeX, reading-order distance, and a name-keyed registry.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/md_extract.hpp"

namespace docparse_eval {

// Plain Levenshtein over any random-access sequences with ==.
template <class Seq>
std::size_t sequence_edit_distance(const Seq& a, const Seq& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[m];
}

// Bit-parallel Levenshtein distance over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

double normalized_edit_distance(std::u32string_view a, std::u32string_view b);
double normalized_edit_distance(std::string_view a, std::string_view b);

struct TableNode {
  std::string label;  // table, thead, tbody, tr, td
  std::u32string text;
  int colspan = 1;
  int rowspan = 1;
  std::vector<std::size_t> children;
};

// Nodes in preorder; node 0 is the root.
struct TableTree {
  std::vector<TableNode> nodes;
  std::vector<std::string> warnings;

  std::size_t size() const { return nodes.size(); }
};

// Throws InputError when no <table> element is present.
TableTree parse_html_table(std::string_view html);

// Canonical HTML for a parsed tree.
std::string serialize_table(const TableTree& tree);

// Zhang-Shasha ordered tree edit distance with the TEDS cost model.
double tree_edit_distance(const TableTree& a, const TableTree& b);

double teds(const TableTree& gt, const TableTree& pred);
// A GT parse failure propagates as InputError; a prediction that does not
// parse scores 0.
double teds(std::string_view gt_html, std::string_view pred_html);

std::vector<std::string> tokenize_latex(std::string_view latex);

double bleu(std::string_view reference, std::string_view hypothesis);

// Normalized Levenshtein distance between two id sequences; 0 when both are
// empty.
double order_distance(const std::vector<std::string>& expected, const std::vector<std::string>& observed);

// Reading-order distance for the text component. GT units are the ordered,
// scored text units of the match; positions come from the start offsets of
// each unit's matched prediction group.
double reading_order_score(const GroundTruthPage& page, const FilteredMatch& match, const ExtractedDoc& extracted);

// Pairwise scorer: (ground truth, prediction) -> value in [0, 1].
using PairMetric = std::function<double(std::string_view, std::string_view)>;

class MetricRegistry {
 public:
  void add(const std::string& name, PairMetric fn);
  bool remove(const std::string& name);
  bool has(const std::string& name) const;
  // Empty function when absent.
  PairMetric get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, PairMetric> metrics_;
};

// Pre-populated with "edit", "teds" and "bleu". Registering "cdm" makes the
// formula component report it as well.
MetricRegistry& metric_registry();

}  // namespace docparse_eval
