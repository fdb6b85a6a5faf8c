#pragma once

// Per-page scores, attribute grouping with mean/variance, overall rows and
// rendering to markdown tables, CSV or JSON.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/layout_eval.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/md_extract.hpp"

namespace docparse_eval {

// A ground-truth block referenced by a score entry, with the attributes
// needed for block-level grouping.
struct BlockRef {
  std::string id;
  Category category = Category::text_block;
  std::optional<TextAttributes> text_attributes;
  std::optional<TableAttributes> table_attributes;
};

// One scored pair or one penalized unmatched GT unit.
struct ScoreEntry {
  Component component = Component::text;
  std::vector<BlockRef> blocks;
  bool matched = true;
  double edit = 0.0;
  std::optional<double> teds;
  std::optional<double> bleu;
  std::optional<double> cdm;
};

struct PageScores {
  std::string page_id;
  PageAttributes attributes;
  std::optional<double> text_edit;
  std::optional<double> formula_edit;
  std::optional<double> formula_bleu;
  std::optional<double> formula_cdm;
  std::optional<double> table_teds;
  std::optional<double> table_edit;
  std::optional<double> read_order_edit;
  std::vector<ScoreEntry> entries;
};

// Matches of one page, one per component.
struct ComponentMatches {
  FilteredMatch text;
  FilteredMatch formula;
  FilteredMatch table;
};

// Fills the optional scores from the matches: pair distances plus a 1.0
// penalty for every scored unmatched GT unit; absent when a component has no
// scored units on the page.
PageScores page_scores(const GroundTruthPage& page, const ComponentMatches& matches, const ExtractedDoc& extracted);

// Recomputes the page-level means from `entries`.
void summarize_entries(PageScores& scores);

enum class Metric { text_edit, formula_edit, formula_bleu, formula_cdm, table_teds, table_edit, read_order_edit };

std::string_view to_string(Metric m);
std::optional<Metric> metric_from_string(std::string_view name);
// TEDS, BLEU and CDM are similarities and are shown as percentages.
bool is_percentage(Metric m);

struct Selector {
  std::string attribute;
  Metric metric = Metric::text_edit;
  bool block_level = false;

  std::string label() const;  // "attribute:metric"
};

// "attr" or "attr:metric". Page-level attributes: pdf_type, layout_type,
// language, special_issues. Block-level: text_language, text_background,
// text_rotation, table_language, table_frame, table_merge_cell,
// table_contains_formula, table_colorful_background, table_rotated.
// Throws InputError for an unknown attribute or metric.
Selector parse_selector(std::string_view text);

struct GroupStats {
  std::string key;
  double mean = 0.0;
  double variance = 0.0;  // population
  std::size_t count = 0;
};

struct GroupTable {
  Selector selector;
  std::vector<GroupStats> groups;
};

// Groups pages (page-level selector) or score entries (block-level) by
// attribute value. Values appear in vocabulary order; empty groups are
// omitted. Pages with several special issues count in each of them; pages
// with none form the "none" group.
GroupTable aggregate(const std::vector<PageScores>& pages, const Selector& selector);

enum class OverallMode { component_mean, pair_pooled };

std::optional<OverallMode> overall_mode_from_string(std::string_view s);
std::string_view to_string(OverallMode m);

struct OverallRow {
  std::string slice;  // page language value or "all"
  std::size_t pages = 0;
  std::optional<double> text_edit;
  std::optional<double> formula_edit;
  std::optional<double> formula_bleu;
  std::optional<double> formula_cdm;
  std::optional<double> table_teds;
  std::optional<double> table_edit;
  std::optional<double> read_order_edit;
  std::optional<double> overall_edit;
  std::vector<std::string> missing;  // edit components absent from the slice
};

// component_mean: each component is the mean of its page scores and the
// overall edit is the unweighted mean of the text, formula, table and
// reading-order means. pair_pooled: components and the overall edit pool
// every score entry (reading order contributes one entry per page).
OverallRow overall(const std::vector<PageScores>& pages, std::string slice, OverallMode mode);

// Rows for every page language present, then "all".
std::vector<OverallRow> overall_rows(const std::vector<PageScores>& pages, OverallMode mode);

struct EvalReport {
  std::string task;
  std::vector<PageScores> per_page;
  std::vector<OverallRow> overall;
  std::vector<GroupTable> groups;
  std::optional<APResult> layout;
};

enum class Format { md, csv, json };

std::optional<Format> format_from_string(std::string_view s);

// Deterministic, locale-independent bytes.
std::string render(const EvalReport& report, Format format);

nlohmann::json to_json(const EvalReport& report);

// Fixed-point formatting independent of the global locale.
std::string format_fixed(double value, int decimals);

}  // namespace docparse_eval
