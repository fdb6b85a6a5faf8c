#pragma once

// Ground-truth annotation model: page attributes, layout blocks with nested
// spans, the annotation file reader, invariant checks and corpus statistics.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace docparse_eval {

enum class PdfType {
  book,
  slides,
  research_report,
  colorful_textbook,
  exam_paper,
  magazine,
  academic_literature,
  notes,
  newspaper,
};

enum class LayoutType { single_column, double_column, three_column, one_and_more_mixed, complex };

enum class Language { en, zh, mixed };

enum class SpecialIssue { fuzzy_scan, watermark, colorful_background };

enum class TextBackground { white, single_color, multi_color };

enum class TextRotation { normal, rotate90, rotate270, horizontal };

enum class TableFrame { full, omission, three_line, zero };

enum class Category {
  // block level
  title,
  text_block,
  figure,
  figure_caption,
  figure_footnote,
  table,
  table_caption,
  table_footnote,
  header,
  footer,
  page_number,
  page_footnote,
  code_block,
  code_block_caption,
  reference,
  equation_isolated,
  // span level
  text_span,
  equation_inline,
  equation_ignore,
  footnote_mark,
  // masked
  other_abandoned,
  masked_text_block,
  organic_chemical_formula,
};

std::string_view to_string(PdfType v);
std::string_view to_string(LayoutType v);
std::string_view to_string(Language v);
std::string_view to_string(SpecialIssue v);
std::string_view to_string(TextBackground v);
std::string_view to_string(TextRotation v);
std::string_view to_string(TableFrame v);
std::string_view to_string(Category v);

// Name lookup; unknown strings yield nullopt. Every enum lists its values in
// declaration order through all_values<E>().
template <class E>
std::optional<E> from_string(std::string_view name);

template <class E>
const std::vector<E>& all_values();

bool is_block_level(Category c);
bool is_span_level(Category c);
bool is_masked(Category c);
// Body categories carry a reading-order index; headers, footers, page
// numbers, page footnotes, captions/footnotes and masked regions do not.
bool carries_order(Category c);

// Which end-to-end component a block feeds into.
enum class Component { text, formula, table, none };
Component component_of(Category c);

// Categories that participate in matching but never contribute to scores.
std::set<Category> default_ignore_categories();

struct BBox {
  double x0 = 0;
  double y0 = 0;
  double x1 = 0;
  double y1 = 0;

  bool well_formed() const { return x0 < x1 && y0 < y1; }
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return well_formed() ? width() * height() : 0.0; }
  // True when `inner` lies inside this box allowing `slack` on every edge.
  bool contains(const BBox& inner, double slack) const;
};

struct PageAttributes {
  PdfType pdf_type = PdfType::book;
  LayoutType layout_type = LayoutType::single_column;
  Language language = Language::en;
  std::set<SpecialIssue> special_issues;
};

struct TextAttributes {
  Language language = Language::en;
  TextBackground background = TextBackground::white;
  TextRotation rotation = TextRotation::normal;
};

struct TableAttributes {
  Language language = Language::en;
  TableFrame frame = TableFrame::full;
  bool merge_cell = false;
  bool contains_formula = false;
  bool colorful_background = false;
  bool rotated = false;
};

struct Span {
  Category category = Category::text_span;
  BBox bbox;
  std::string content;
};

struct Block {
  std::string id;
  Category category = Category::text_block;
  BBox bbox;
  // Plain text, LaTeX or HTML depending on the category.
  std::optional<std::string> content;
  // Tables keep an optional LaTeX rendition; metrics only use HTML.
  std::optional<std::string> latex;
  std::optional<TextAttributes> text_attributes;
  std::optional<TableAttributes> table_attributes;
  std::optional<int> order;
  std::optional<std::string> affiliation;
  std::vector<Span> spans;
};

struct GroundTruthPage {
  std::string page_id;
  PageAttributes attributes;
  std::vector<Block> blocks;

  const Block* find_block(std::string_view id) const;
};

struct Dataset {
  std::vector<GroundTruthPage> pages;

  const GroundTruthPage* find_page(std::string_view page_id) const;
};

enum class Severity { warning, error };
std::string_view to_string(Severity s);

struct Finding {
  Severity severity = Severity::error;
  std::string code;  // e.g. "dangling_affiliation", "span_containment"
  std::string page_id;
  std::string block_id;
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;  // no error-severity findings
  std::size_t error_count() const;
  std::size_t warning_count() const;
};

// Span boxes may overhang their parent block by this many pixels per edge.
inline constexpr double kSpanContainmentSlack = 2.0;

// Schema-level parsing only (types, required fields, vocabularies). Polygons
// of 8 numbers are reduced to their bounding rectangle. Throws SchemaError.
Dataset parse_dataset(const nlohmann::json& doc);
Dataset parse_dataset_text(std::string_view json_text);

// Reads, parses and validates; the first error finding is raised as a
// SchemaError. I/O failures raise InputError.
Dataset load_dataset(const std::filesystem::path& path);

// Reads and parses without invariant enforcement, so `validate` can report
// every finding of a broken file.
Dataset read_dataset_unchecked(const std::filesystem::path& path);

// Best-effort import of the upstream benchmark release format (a list of
// pages with "layout_dets" and "page_info"). Unknown vocabulary is skipped
// and reported through `warnings`.
Dataset import_native_dataset(const nlohmann::json& doc, std::vector<std::string>* warnings = nullptr);

bool looks_like_native_format(const nlohmann::json& doc);

ValidationReport validate(const Dataset& dataset);

nlohmann::json to_json(const Dataset& dataset);

struct CountTable {
  std::string name;
  std::vector<std::pair<std::string, std::size_t>> rows;

  std::size_t total() const;
  std::size_t at(std::string_view key) const;  // 0 when absent
};

struct StatsReport {
  std::size_t pages = 0;
  std::size_t blocks = 0;
  std::size_t spans = 0;
  std::vector<CountTable> tables;

  const CountTable& table(std::string_view name) const;  // throws std::out_of_range
};

// Tables produced (in this order): pdf_type, layout_type, language,
// special_issues, block_category, span_category, text_language,
// text_background, text_rotation, table_language, table_frame, table_special.
StatsReport dataset_stats(const Dataset& dataset);

nlohmann::json to_json(const StatsReport& stats);

// Serializes the page's scored body in reading order as the markdown a
// perfect parser would emit. Throws SchemaError for an ordered text-bearing
// block without content.
std::string gt_page_to_markdown(const GroundTruthPage& page);

}  // namespace docparse_eval
