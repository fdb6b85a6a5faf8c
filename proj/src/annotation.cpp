#include "docparse_eval/annotation.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/unicode.hpp"

namespace docparse_eval {

using nlohmann::json;

namespace {

template <class E, std::size_t N>
struct EnumNames {
  std::array<std::pair<E, std::string_view>, N> entries;

  std::string_view name(E v) const {
    for (const auto& [e, n] : entries) {
      if (e == v) return n;
    }
    return "?";
  }
  std::optional<E> lookup(std::string_view n) const {
    for (const auto& [e, s] : entries) {
      if (s == n) return e;
    }
    return std::nullopt;
  }
  std::vector<E> values() const {
    std::vector<E> out;
    for (const auto& [e, s] : entries) out.push_back(e);
    return out;
  }
};

constexpr EnumNames<PdfType, 9> kPdfTypes{{{
    {PdfType::book, "book"},
    {PdfType::slides, "slides"},
    {PdfType::research_report, "research_report"},
    {PdfType::colorful_textbook, "colorful_textbook"},
    {PdfType::exam_paper, "exam_paper"},
    {PdfType::magazine, "magazine"},
    {PdfType::academic_literature, "academic_literature"},
    {PdfType::notes, "notes"},
    {PdfType::newspaper, "newspaper"},
}}};

constexpr EnumNames<LayoutType, 5> kLayoutTypes{{{
    {LayoutType::single_column, "single_column"},
    {LayoutType::double_column, "double_column"},
    {LayoutType::three_column, "three_column"},
    {LayoutType::one_and_more_mixed, "one_and_more_mixed"},
    {LayoutType::complex, "complex"},
}}};

constexpr EnumNames<Language, 3> kLanguages{{{
    {Language::en, "en"},
    {Language::zh, "zh"},
    {Language::mixed, "mixed"},
}}};

constexpr EnumNames<SpecialIssue, 3> kSpecialIssues{{{
    {SpecialIssue::fuzzy_scan, "fuzzy_scan"},
    {SpecialIssue::watermark, "watermark"},
    {SpecialIssue::colorful_background, "colorful_background"},
}}};

constexpr EnumNames<TextBackground, 3> kBackgrounds{{{
    {TextBackground::white, "white"},
    {TextBackground::single_color, "single_color"},
    {TextBackground::multi_color, "multi_color"},
}}};

constexpr EnumNames<TextRotation, 4> kRotations{{{
    {TextRotation::normal, "normal"},
    {TextRotation::rotate90, "rotate90"},
    {TextRotation::rotate270, "rotate270"},
    {TextRotation::horizontal, "horizontal"},
}}};

constexpr EnumNames<TableFrame, 4> kFrames{{{
    {TableFrame::full, "full"},
    {TableFrame::omission, "omission"},
    {TableFrame::three_line, "three_line"},
    {TableFrame::zero, "zero"},
}}};

constexpr EnumNames<Category, 23> kCategories{{{
    {Category::title, "title"},
    {Category::text_block, "text_block"},
    {Category::figure, "figure"},
    {Category::figure_caption, "figure_caption"},
    {Category::figure_footnote, "figure_footnote"},
    {Category::table, "table"},
    {Category::table_caption, "table_caption"},
    {Category::table_footnote, "table_footnote"},
    {Category::header, "header"},
    {Category::footer, "footer"},
    {Category::page_number, "page_number"},
    {Category::page_footnote, "page_footnote"},
    {Category::code_block, "code_block"},
    {Category::code_block_caption, "code_block_caption"},
    {Category::reference, "reference"},
    {Category::equation_isolated, "equation_isolated"},
    {Category::text_span, "text_span"},
    {Category::equation_inline, "equation_inline"},
    {Category::equation_ignore, "equation_ignore"},
    {Category::footnote_mark, "footnote_mark"},
    {Category::other_abandoned, "other_abandoned"},
    {Category::masked_text_block, "masked_text_block"},
    {Category::organic_chemical_formula, "organic_chemical_formula"},
}}};

constexpr EnumNames<Severity, 2> kSeverities{{{
    {Severity::warning, "warning"},
    {Severity::error, "error"},
}}};

}  // namespace

std::string_view to_string(PdfType v) { return kPdfTypes.name(v); }
std::string_view to_string(LayoutType v) { return kLayoutTypes.name(v); }
std::string_view to_string(Language v) { return kLanguages.name(v); }
std::string_view to_string(SpecialIssue v) { return kSpecialIssues.name(v); }
std::string_view to_string(TextBackground v) { return kBackgrounds.name(v); }
std::string_view to_string(TextRotation v) { return kRotations.name(v); }
std::string_view to_string(TableFrame v) { return kFrames.name(v); }
std::string_view to_string(Category v) { return kCategories.name(v); }
std::string_view to_string(Severity v) { return kSeverities.name(v); }

#define DOCPARSE_EVAL_ENUM_LOOKUP(E, table)                                  \
  template <>                                                                \
  std::optional<E> from_string<E>(std::string_view name) {                   \
    return table.lookup(name);                                               \
  }                                                                          \
  template <>                                                                \
  const std::vector<E>& all_values<E>() {                                    \
    static const std::vector<E> values = table.values();                     \
    return values;                                                           \
  }

DOCPARSE_EVAL_ENUM_LOOKUP(PdfType, kPdfTypes)
DOCPARSE_EVAL_ENUM_LOOKUP(LayoutType, kLayoutTypes)
DOCPARSE_EVAL_ENUM_LOOKUP(Language, kLanguages)
DOCPARSE_EVAL_ENUM_LOOKUP(SpecialIssue, kSpecialIssues)
DOCPARSE_EVAL_ENUM_LOOKUP(TextBackground, kBackgrounds)
DOCPARSE_EVAL_ENUM_LOOKUP(TextRotation, kRotations)
DOCPARSE_EVAL_ENUM_LOOKUP(TableFrame, kFrames)
DOCPARSE_EVAL_ENUM_LOOKUP(Category, kCategories)
DOCPARSE_EVAL_ENUM_LOOKUP(Severity, kSeverities)

#undef DOCPARSE_EVAL_ENUM_LOOKUP

bool is_span_level(Category c) {
  switch (c) {
    case Category::text_span:
    case Category::equation_inline:
    case Category::equation_ignore:
    case Category::footnote_mark:
      return true;
    default:
      return false;
  }
}

bool is_masked(Category c) {
  return c == Category::other_abandoned || c == Category::masked_text_block ||
         c == Category::organic_chemical_formula;
}

bool is_block_level(Category c) { return !is_span_level(c) && !is_masked(c); }

bool carries_order(Category c) {
  switch (c) {
    case Category::title:
    case Category::text_block:
    case Category::figure:
    case Category::table:
    case Category::code_block:
    case Category::reference:
    case Category::equation_isolated:
      return true;
    default:
      return false;
  }
}

Component component_of(Category c) {
  switch (c) {
    case Category::table:
      return Component::table;
    case Category::equation_isolated:
      return Component::formula;
    case Category::figure:
    case Category::text_span:
    case Category::equation_inline:
    case Category::equation_ignore:
    case Category::footnote_mark:
      return Component::none;
    default:
      return Component::text;
  }
}

std::set<Category> default_ignore_categories() {
  return {Category::header,          Category::footer,         Category::page_number,
          Category::page_footnote,   Category::figure_caption, Category::figure_footnote,
          Category::table_caption,   Category::table_footnote, Category::code_block_caption,
          Category::other_abandoned, Category::masked_text_block,
          Category::organic_chemical_formula};
}

bool BBox::contains(const BBox& inner, double slack) const {
  return inner.x0 >= x0 - slack && inner.y0 >= y0 - slack && inner.x1 <= x1 + slack && inner.y1 <= y1 + slack;
}

const Block* GroundTruthPage::find_block(std::string_view id) const {
  for (const auto& b : blocks) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const GroundTruthPage* Dataset::find_page(std::string_view page_id) const {
  for (const auto& p : pages) {
    if (p.page_id == page_id) return &p;
  }
  return nullptr;
}

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [](const Finding& f) { return f.severity == Severity::error; }));
}

std::size_t ValidationReport::warning_count() const { return findings.size() - error_count(); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Where {
  std::string page_id;
  std::string block_id;
};

[[noreturn]] void schema_fail(const Where& w, const std::string& field, const std::string& msg) {
  throw SchemaError(w.page_id, w.block_id, field, msg);
}

const json& require(const json& obj, const char* key, const Where& w) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(w, key, "missing required field");
  return *it;
}

std::string require_string(const json& obj, const char* key, const Where& w) {
  const json& v = require(obj, key, w);
  if (!v.is_string()) schema_fail(w, key, "expected a string");
  return v.get<std::string>();
}

template <class E>
E require_enum(const json& obj, const char* key, const Where& w) {
  std::string s = require_string(obj, key, w);
  auto e = from_string<E>(s);
  if (!e) schema_fail(w, key, "unknown value '" + s + "'");
  return *e;
}

bool require_bool(const json& obj, const char* key, const Where& w) {
  const json& v = require(obj, key, w);
  if (!v.is_boolean()) schema_fail(w, key, "expected a boolean");
  return v.get<bool>();
}

std::optional<std::string> optional_string(const json& obj, const char* key, const Where& w) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_fail(w, key, "expected a string or null");
  return it->get<std::string>();
}

BBox parse_bbox(const json& v, const Where& w, const std::string& field) {
  if (!v.is_array() || (v.size() != 4 && v.size() != 8)) {
    schema_fail(w, field, "expected [x0,y0,x1,y1] or an 8-number polygon");
  }
  std::vector<double> nums;
  for (const auto& n : v) {
    if (!n.is_number()) schema_fail(w, field, "coordinates must be numbers");
    nums.push_back(n.get<double>());
  }
  if (nums.size() == 4) return BBox{nums[0], nums[1], nums[2], nums[3]};
  BBox b{nums[0], nums[1], nums[0], nums[1]};
  for (std::size_t i = 0; i < 8; i += 2) {
    b.x0 = std::min(b.x0, nums[i]);
    b.x1 = std::max(b.x1, nums[i]);
    b.y0 = std::min(b.y0, nums[i + 1]);
    b.y1 = std::max(b.y1, nums[i + 1]);
  }
  return b;
}

TextAttributes parse_text_attributes(const json& v, const Where& w) {
  if (!v.is_object()) schema_fail(w, "text_attributes", "expected an object or null");
  TextAttributes a;
  a.language = require_enum<Language>(v, "language", w);
  a.background = require_enum<TextBackground>(v, "background", w);
  a.rotation = require_enum<TextRotation>(v, "rotation", w);
  return a;
}

TableAttributes parse_table_attributes(const json& v, const Where& w) {
  if (!v.is_object()) schema_fail(w, "table_attributes", "expected an object or null");
  TableAttributes a;
  a.language = require_enum<Language>(v, "language", w);
  a.frame = require_enum<TableFrame>(v, "frame", w);
  a.merge_cell = require_bool(v, "merge_cell", w);
  a.contains_formula = require_bool(v, "contains_formula", w);
  a.colorful_background = require_bool(v, "colorful_background", w);
  a.rotated = require_bool(v, "rotated", w);
  return a;
}

Block parse_block(const json& v, Where w) {
  if (!v.is_object()) schema_fail(w, "blocks", "block must be an object");
  Block b;
  b.id = require_string(v, "id", w);
  w.block_id = b.id;
  b.category = require_enum<Category>(v, "category", w);
  b.bbox = parse_bbox(require(v, "bbox", w), w, "bbox");
  b.content = optional_string(v, "content", w);
  b.latex = optional_string(v, "latex", w);
  if (auto it = v.find("text_attributes"); it != v.end() && !it->is_null()) {
    b.text_attributes = parse_text_attributes(*it, w);
  }
  if (auto it = v.find("table_attributes"); it != v.end() && !it->is_null()) {
    b.table_attributes = parse_table_attributes(*it, w);
  }
  if (auto it = v.find("order"); it != v.end() && !it->is_null()) {
    if (!it->is_number_integer()) schema_fail(w, "order", "expected an integer or null");
    b.order = it->get<int>();
    if (*b.order < 0) schema_fail(w, "order", "reading order must be non-negative");
  }
  b.affiliation = optional_string(v, "affiliation", w);
  if (auto it = v.find("spans"); it != v.end() && !it->is_null()) {
    if (!it->is_array()) schema_fail(w, "spans", "expected a list");
    for (const auto& s : *it) {
      if (!s.is_object()) schema_fail(w, "spans", "span must be an object");
      Span span;
      span.category = require_enum<Category>(s, "category", w);
      span.bbox = parse_bbox(require(s, "bbox", w), w, "spans.bbox");
      span.content = optional_string(s, "content", w).value_or("");
      b.spans.push_back(std::move(span));
    }
  }
  return b;
}

GroundTruthPage parse_page(const json& v, std::size_t index) {
  Where w;
  w.page_id = "#" + std::to_string(index);
  if (!v.is_object()) schema_fail(w, "", "page must be an object");
  GroundTruthPage page;
  page.page_id = require_string(v, "page_id", w);
  w.page_id = page.page_id;
  const json& attrs = require(v, "attributes", w);
  if (!attrs.is_object()) schema_fail(w, "attributes", "expected an object");
  page.attributes.pdf_type = require_enum<PdfType>(attrs, "pdf_type", w);
  page.attributes.layout_type = require_enum<LayoutType>(attrs, "layout_type", w);
  page.attributes.language = require_enum<Language>(attrs, "language", w);
  if (auto it = attrs.find("special_issues"); it != attrs.end() && !it->is_null()) {
    if (!it->is_array()) schema_fail(w, "special_issues", "expected a list");
    for (const auto& s : *it) {
      if (!s.is_string()) schema_fail(w, "special_issues", "expected strings");
      auto e = from_string<SpecialIssue>(s.get<std::string>());
      if (!e) schema_fail(w, "special_issues", "unknown value '" + s.get<std::string>() + "'");
      page.attributes.special_issues.insert(*e);
    }
  }
  const json& blocks = require(v, "blocks", w);
  if (!blocks.is_array()) schema_fail(w, "blocks", "expected a list");
  for (const auto& b : blocks) page.blocks.push_back(parse_block(b, w));
  return page;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw InputError("failed reading '" + path.string() + "'");
  return ss.str();
}

json parse_json_text(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(origin + ": malformed JSON: " + e.what());
  }
}

}  // namespace

Dataset parse_dataset(const json& doc) {
  if (!doc.is_array()) throw SchemaError("", "", "", "annotation file must contain a list of pages");
  Dataset ds;
  ds.pages.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) ds.pages.push_back(parse_page(doc[i], i));
  return ds;
}

Dataset parse_dataset_text(std::string_view json_text) {
  return parse_dataset(parse_json_text(json_text, "annotation text"));
}

Dataset read_dataset_unchecked(const std::filesystem::path& path) {
  json doc = parse_json_text(read_file(path), path.string());
  if (looks_like_native_format(doc)) return import_native_dataset(doc);
  return parse_dataset(doc);
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds = read_dataset_unchecked(path);
  ValidationReport report = validate(ds);
  for (const auto& f : report.findings) {
    if (f.severity == Severity::error) throw SchemaError(f.page_id, f.block_id, f.field, f.message);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate(const Dataset& dataset) {
  ValidationReport report;
  auto add = [&](Severity sev, std::string code, const std::string& page, const std::string& block,
                 std::string field, std::string message) {
    report.findings.push_back(Finding{sev, std::move(code), page, block, std::move(field), std::move(message)});
  };

  std::set<std::string> page_ids;
  for (const auto& page : dataset.pages) {
    const std::string& pid = page.page_id;
    if (!page_ids.insert(pid).second) add(Severity::error, "duplicate_page_id", pid, "", "page_id", "page id is not unique");

    std::set<std::string> block_ids;
    std::map<int, std::string> orders;
    for (const auto& b : page.blocks) {
      if (!block_ids.insert(b.id).second) add(Severity::error, "duplicate_block_id", pid, b.id, "id", "block id is not unique");
      if (!b.bbox.well_formed()) add(Severity::error, "bbox", pid, b.id, "bbox", "bbox must satisfy x0<x1 and y0<y1");
      if (is_span_level(b.category)) {
        add(Severity::error, "block_category", pid, b.id, "category",
            "span-level category '" + std::string(to_string(b.category)) + "' used as a block");
      }
      const bool is_table = b.category == Category::table;
      if (is_table && !b.table_attributes) {
        add(Severity::error, "table_attributes", pid, b.id, "table_attributes", "table block requires table_attributes");
      }
      if (!is_table && b.table_attributes) {
        add(Severity::error, "table_attributes", pid, b.id, "table_attributes", "only table blocks carry table_attributes");
      }
      const bool wants_order = carries_order(b.category);
      if (wants_order && !b.order) {
        add(Severity::error, "order_presence", pid, b.id, "order",
            "category '" + std::string(to_string(b.category)) + "' requires a reading-order index");
      }
      if (!wants_order && b.order) {
        add(Severity::error, "order_presence", pid, b.id, "order",
            "category '" + std::string(to_string(b.category)) + "' must not carry a reading-order index");
      }
      if (b.order) {
        auto [it, inserted] = orders.emplace(*b.order, b.id);
        if (!inserted) {
          add(Severity::error, "order_duplicate", pid, b.id, "order",
              "duplicate reading-order index " + std::to_string(*b.order) + " (also on block '" + it->second + "')");
        }
      }
      if (wants_order && b.category != Category::figure && b.content && trim(*b.content).empty()) {
        add(Severity::warning, "empty_content", pid, b.id, "content", "body block has an empty payload");
      }
      for (std::size_t si = 0; si < b.spans.size(); ++si) {
        const Span& s = b.spans[si];
        const std::string field = "spans[" + std::to_string(si) + "]";
        if (!is_span_level(s.category)) {
          add(Severity::error, "span_category", pid, b.id, field,
              "category '" + std::string(to_string(s.category)) + "' is not span-level");
        }
        if (!s.bbox.well_formed()) add(Severity::error, "bbox", pid, b.id, field, "span bbox must satisfy x0<x1 and y0<y1");
        if (!b.bbox.contains(s.bbox, kSpanContainmentSlack)) {
          add(Severity::error, "span_containment", pid, b.id, field, "span bbox lies outside its parent block");
        }
      }
    }
    // Contiguity of reading order: sorted indices must be 0..k-1.
    int expected = 0;
    for (const auto& [ord, bid] : orders) {
      if (ord != expected) {
        add(Severity::error, "order_gap", pid, bid, "order",
            "reading-order indices must form 0..k-1; found " + std::to_string(ord) + " where " +
                std::to_string(expected) + " was expected");
        break;
      }
      ++expected;
    }
    for (const auto& b : page.blocks) {
      if (b.affiliation && !block_ids.count(*b.affiliation)) {
        add(Severity::error, "dangling_affiliation", pid, b.id, "affiliation",
            "affiliation references missing block '" + *b.affiliation + "'");
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json bbox_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

}  // namespace

json to_json(const Dataset& dataset) {
  json pages = json::array();
  for (const auto& page : dataset.pages) {
    json issues = json::array();
    for (auto s : page.attributes.special_issues) issues.push_back(std::string(to_string(s)));
    json blocks = json::array();
    for (const auto& b : page.blocks) {
      json jb;
      jb["id"] = b.id;
      jb["category"] = std::string(to_string(b.category));
      jb["bbox"] = bbox_json(b.bbox);
      jb["content"] = b.content ? json(*b.content) : json(nullptr);
      if (b.latex) jb["latex"] = *b.latex;
      if (b.text_attributes) {
        jb["text_attributes"] = {{"language", to_string(b.text_attributes->language)},
                                 {"background", to_string(b.text_attributes->background)},
                                 {"rotation", to_string(b.text_attributes->rotation)}};
      } else {
        jb["text_attributes"] = nullptr;
      }
      if (b.table_attributes) {
        const auto& t = *b.table_attributes;
        jb["table_attributes"] = {{"language", to_string(t.language)},
                                  {"frame", to_string(t.frame)},
                                  {"merge_cell", t.merge_cell},
                                  {"contains_formula", t.contains_formula},
                                  {"colorful_background", t.colorful_background},
                                  {"rotated", t.rotated}};
      } else {
        jb["table_attributes"] = nullptr;
      }
      jb["order"] = b.order ? json(*b.order) : json(nullptr);
      jb["affiliation"] = b.affiliation ? json(*b.affiliation) : json(nullptr);
      json spans = json::array();
      for (const auto& s : b.spans) {
        spans.push_back({{"category", to_string(s.category)}, {"bbox", bbox_json(s.bbox)}, {"content", s.content}});
      }
      jb["spans"] = std::move(spans);
      blocks.push_back(std::move(jb));
    }
    pages.push_back({{"page_id", page.page_id},
                     {"attributes",
                      {{"pdf_type", to_string(page.attributes.pdf_type)},
                       {"layout_type", to_string(page.attributes.layout_type)},
                       {"language", to_string(page.attributes.language)},
                       {"special_issues", issues}}},
                     {"blocks", std::move(blocks)}});
  }
  return pages;
}

// ---------------------------------------------------------------------------
// Statistics

std::size_t CountTable::total() const {
  std::size_t t = 0;
  for (const auto& [k, v] : rows) t += v;
  return t;
}

std::size_t CountTable::at(std::string_view key) const {
  for (const auto& [k, v] : rows) {
    if (k == key) return v;
  }
  return 0;
}

const CountTable& StatsReport::table(std::string_view name) const {
  for (const auto& t : tables) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no stats table named '" + std::string(name) + "'");
}

namespace {

template <class E>
CountTable make_table(std::string name) {
  CountTable t{std::move(name), {}};
  for (E e : all_values<E>()) t.rows.emplace_back(std::string(to_string(e)), 0);
  return t;
}

void bump(CountTable& t, std::string_view key) {
  for (auto& [k, v] : t.rows) {
    if (k == key) {
      ++v;
      return;
    }
  }
  t.rows.emplace_back(std::string(key), 1);
}

}  // namespace

StatsReport dataset_stats(const Dataset& dataset) {
  CountTable pdf = make_table<PdfType>("pdf_type");
  CountTable layout = make_table<LayoutType>("layout_type");
  CountTable lang = make_table<Language>("language");
  CountTable issues = make_table<SpecialIssue>("special_issues");
  issues.rows.emplace_back("none", 0);
  CountTable block_cat{"block_category", {}};
  CountTable span_cat{"span_category", {}};
  for (Category c : all_values<Category>()) {
    if (is_span_level(c)) {
      span_cat.rows.emplace_back(std::string(to_string(c)), 0);
    } else {
      block_cat.rows.emplace_back(std::string(to_string(c)), 0);
    }
  }
  CountTable text_lang = make_table<Language>("text_language");
  CountTable text_bg = make_table<TextBackground>("text_background");
  CountTable text_rot = make_table<TextRotation>("text_rotation");
  CountTable table_lang = make_table<Language>("table_language");
  CountTable table_frame = make_table<TableFrame>("table_frame");
  CountTable table_special{"table_special",
                           {{"merge_cell", 0}, {"contains_formula", 0}, {"colorful_background", 0}, {"rotated", 0}}};

  StatsReport r;
  for (const auto& page : dataset.pages) {
    ++r.pages;
    bump(pdf, to_string(page.attributes.pdf_type));
    bump(layout, to_string(page.attributes.layout_type));
    bump(lang, to_string(page.attributes.language));
    if (page.attributes.special_issues.empty()) bump(issues, "none");
    for (auto s : page.attributes.special_issues) bump(issues, to_string(s));
    for (const auto& b : page.blocks) {
      ++r.blocks;
      bump(block_cat, to_string(b.category));
      for (const auto& s : b.spans) {
        ++r.spans;
        bump(span_cat, to_string(s.category));
      }
      if (b.text_attributes) {
        bump(text_lang, to_string(b.text_attributes->language));
        bump(text_bg, to_string(b.text_attributes->background));
        bump(text_rot, to_string(b.text_attributes->rotation));
      }
      if (b.table_attributes) {
        const auto& t = *b.table_attributes;
        bump(table_lang, to_string(t.language));
        bump(table_frame, to_string(t.frame));
        if (t.merge_cell) bump(table_special, "merge_cell");
        if (t.contains_formula) bump(table_special, "contains_formula");
        if (t.colorful_background) bump(table_special, "colorful_background");
        if (t.rotated) bump(table_special, "rotated");
      }
    }
  }
  r.tables = {std::move(pdf),      std::move(layout),   std::move(lang),       std::move(issues),
              std::move(block_cat), std::move(span_cat), std::move(text_lang),  std::move(text_bg),
              std::move(text_rot), std::move(table_lang), std::move(table_frame), std::move(table_special)};
  return r;
}

json to_json(const StatsReport& stats) {
  json tables = json::object();
  for (const auto& t : stats.tables) {
    json rows = json::object();
    for (const auto& [k, v] : t.rows) rows[k] = v;
    tables[t.name] = std::move(rows);
  }
  return {{"pages", stats.pages}, {"blocks", stats.blocks}, {"spans", stats.spans}, {"tables", std::move(tables)}};
}

// ---------------------------------------------------------------------------
// Ground truth as markdown

std::string gt_page_to_markdown(const GroundTruthPage& page) {
  std::vector<const Block*> body;
  for (const auto& b : page.blocks) {
    if (b.order && carries_order(b.category)) body.push_back(&b);
  }
  std::stable_sort(body.begin(), body.end(), [](const Block* a, const Block* b) { return *a->order < *b->order; });

  std::string out;
  auto emit = [&](const std::string& piece) {
    if (!out.empty()) out += "\n\n";
    out += piece;
  };
  for (const Block* b : body) {
    if (b->category == Category::figure) continue;
    if (!b->content) throw SchemaError(page.page_id, b->id, "content", "ordered block has no content payload");
    const std::string& c = *b->content;
    switch (b->category) {
      case Category::equation_isolated:
        emit("$$" + c + "$$");
        break;
      case Category::code_block:
        emit("```\n" + c + "\n```");
        break;
      default:
        emit(c);
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Upstream release format

bool looks_like_native_format(const json& doc) {
  return doc.is_array() && !doc.empty() && doc.front().is_object() && doc.front().contains("layout_dets");
}

namespace {

std::optional<Category> native_category(const std::string& s) {
  static const std::map<std::string, Category> kMap = {
      {"title", Category::title},
      {"text_block", Category::text_block},
      {"figure", Category::figure},
      {"figure_caption", Category::figure_caption},
      {"figure_footnote", Category::figure_footnote},
      {"table", Category::table},
      {"table_caption", Category::table_caption},
      {"table_footnote", Category::table_footnote},
      {"header", Category::header},
      {"footer", Category::footer},
      {"page_number", Category::page_number},
      {"page_footnote", Category::page_footnote},
      {"code_txt", Category::code_block},
      {"code_block", Category::code_block},
      {"code_txt_caption", Category::code_block_caption},
      {"code_block_caption", Category::code_block_caption},
      {"reference", Category::reference},
      {"equation_isolated", Category::equation_isolated},
      {"text_span", Category::text_span},
      {"equation_inline", Category::equation_inline},
      {"equation_ignore", Category::equation_ignore},
      {"footnote_mark", Category::footnote_mark},
      {"abandon", Category::other_abandoned},
      {"other_abandoned", Category::other_abandoned},
      {"text_mask", Category::masked_text_block},
      {"masked_text_block", Category::masked_text_block},
      {"need_mask", Category::masked_text_block},
      {"organic_chemical_formula", Category::organic_chemical_formula},
      {"chemistry", Category::organic_chemical_formula},
  };
  auto it = kMap.find(s);
  if (it == kMap.end()) return std::nullopt;
  return it->second;
}

std::optional<Language> native_language(std::string s) {
  for (const char* prefix : {"text_", "table_"}) {
    if (s.rfind(prefix, 0) == 0) s = s.substr(std::string(prefix).size());
  }
  if (s == "english" || s == "en") return Language::en;
  if (s == "simplified_chinese" || s == "chinese" || s == "zh" || s == "ch") return Language::zh;
  if (s == "en_ch_mixed" || s == "mixed" || s == "ch_en_mixed") return Language::mixed;
  return std::nullopt;
}

std::optional<PdfType> native_pdf_type(const std::string& s) {
  static const std::map<std::string, PdfType> kMap = {
      {"book", PdfType::book},
      {"PPT2PDF", PdfType::slides},
      {"ppt2pdf", PdfType::slides},
      {"slides", PdfType::slides},
      {"research_report", PdfType::research_report},
      {"financial_report", PdfType::research_report},
      {"colorful_textbook", PdfType::colorful_textbook},
      {"exam_paper", PdfType::exam_paper},
      {"magazine", PdfType::magazine},
      {"academic_literature", PdfType::academic_literature},
      {"note", PdfType::notes},
      {"notes", PdfType::notes},
      {"newspaper", PdfType::newspaper},
  };
  auto it = kMap.find(s);
  if (it == kMap.end()) return std::nullopt;
  return it->second;
}

std::optional<LayoutType> native_layout(const std::string& s) {
  static const std::map<std::string, LayoutType> kMap = {
      {"single_column", LayoutType::single_column}, {"double_column", LayoutType::double_column},
      {"three_column", LayoutType::three_column},   {"1andmore_column", LayoutType::one_and_more_mixed},
      {"one_and_more_mixed", LayoutType::one_and_more_mixed}, {"other_layout", LayoutType::complex},
      {"complex", LayoutType::complex},
  };
  auto it = kMap.find(s);
  if (it == kMap.end()) return std::nullopt;
  return it->second;
}

std::optional<BBox> native_bbox(const json& det) {
  for (const char* key : {"poly", "bbox"}) {
    auto it = det.find(key);
    if (it == det.end() || !it->is_array() || (it->size() != 4 && it->size() != 8)) continue;
    try {
      return parse_bbox(*it, Where{}, key);
    } catch (const SchemaError&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string json_string_or(const json& obj, const char* key, std::string fallback = {}) {
  auto it = obj.find(key);
  if (it != obj.end() && it->is_string()) return it->get<std::string>();
  return fallback;
}

bool json_bool_or(const json& obj, const char* key, bool fallback = false) {
  auto it = obj.find(key);
  if (it != obj.end() && it->is_boolean()) return it->get<bool>();
  return fallback;
}

}  // namespace

Dataset import_native_dataset(const json& doc, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  if (!doc.is_array()) throw SchemaError("", "", "", "native annotation file must contain a list of pages");
  Dataset ds;
  for (std::size_t pi = 0; pi < doc.size(); ++pi) {
    const json& jp = doc[pi];
    GroundTruthPage page;
    const json empty = json::object();
    const json& info = jp.contains("page_info") ? jp["page_info"] : empty;
    std::string image = json_string_or(info, "image_path", "page_" + std::to_string(pi));
    page.page_id = std::filesystem::path(image).stem().string();
    const json& pattr = info.contains("page_attribute") ? info["page_attribute"] : empty;
    if (auto v = native_pdf_type(json_string_or(pattr, "data_source"))) {
      page.attributes.pdf_type = *v;
    } else {
      warn(page.page_id + ": unknown data_source '" + json_string_or(pattr, "data_source") + "'");
    }
    if (auto v = native_layout(json_string_or(pattr, "layout"))) {
      page.attributes.layout_type = *v;
    } else {
      warn(page.page_id + ": unknown layout '" + json_string_or(pattr, "layout") + "'");
    }
    if (auto v = native_language(json_string_or(pattr, "language"))) {
      page.attributes.language = *v;
    } else {
      warn(page.page_id + ": unknown language '" + json_string_or(pattr, "language") + "'");
    }
    if (json_bool_or(pattr, "fuzzy_scan")) page.attributes.special_issues.insert(SpecialIssue::fuzzy_scan);
    if (json_bool_or(pattr, "watermark")) page.attributes.special_issues.insert(SpecialIssue::watermark);
    if (json_bool_or(pattr, "colorful_backgroud") || json_bool_or(pattr, "colorful_background")) {
      page.attributes.special_issues.insert(SpecialIssue::colorful_background);
    }

    const json dets = jp.value("layout_dets", json::array());
    for (std::size_t bi = 0; bi < dets.size(); ++bi) {
      const json& d = dets[bi];
      auto cat = native_category(json_string_or(d, "category_type"));
      if (!cat) {
        warn(page.page_id + ": skipped unknown category '" + json_string_or(d, "category_type") + "'");
        continue;
      }
      Block b;
      if (auto it = d.find("anno_id"); it != d.end() && !it->is_null()) {
        b.id = it->is_string() ? it->get<std::string>() : it->dump();
      } else {
        b.id = std::to_string(bi);
      }
      b.category = *cat;
      b.bbox = native_bbox(d).value_or(BBox{});
      if (*cat == Category::table) {
        if (auto h = json_string_or(d, "html"); !h.empty()) b.content = h;
        if (auto l = json_string_or(d, "latex"); !l.empty()) b.latex = l;
      } else if (*cat == Category::equation_isolated) {
        std::string l = json_string_or(d, "latex");
        auto strip = [&](std::string_view open, std::string_view close) {
          if (l.size() >= open.size() + close.size() && l.rfind(open, 0) == 0 &&
              l.compare(l.size() - close.size(), close.size(), close) == 0) {
            l = l.substr(open.size(), l.size() - open.size() - close.size());
          }
        };
        strip("$$", "$$");
        strip("\\[", "\\]");
        b.content = trim(l);
      } else if (d.contains("text") && d["text"].is_string()) {
        b.content = d["text"].get<std::string>();
      }
      if (auto it = d.find("order"); it != d.end() && it->is_number_integer()) b.order = it->get<int>();
      const json& attr = d.contains("attribute") && d["attribute"].is_object() ? d["attribute"] : empty;
      if (*cat == Category::table) {
        TableAttributes t;
        if (auto l = native_language(json_string_or(attr, "language"))) t.language = *l;
        std::string line = json_string_or(attr, "line");
        if (line == "full_line") t.frame = TableFrame::full;
        else if (line == "less_line" || line == "omission_line") t.frame = TableFrame::omission;
        else if (line == "fewer_line" || line == "three_line") t.frame = TableFrame::three_line;
        else if (line == "wireless_line" || line == "no_line") t.frame = TableFrame::zero;
        t.merge_cell = json_bool_or(attr, "with_span");
        t.contains_formula = json_bool_or(attr, "include_equation");
        t.colorful_background = json_bool_or(attr, "include_backgroud") || json_bool_or(attr, "include_background");
        t.rotated = json_bool_or(attr, "table_vertical");
        b.table_attributes = t;
      } else if (attr.contains("text_language") || attr.contains("text_background") || attr.contains("text_rotate")) {
        TextAttributes t;
        if (auto l = native_language(json_string_or(attr, "text_language"))) t.language = *l;
        std::string bg = json_string_or(attr, "text_background");
        if (bg == "single_colored" || bg == "single_color") t.background = TextBackground::single_color;
        else if (bg == "multi_colored" || bg == "multi_color") t.background = TextBackground::multi_color;
        std::string rot = json_string_or(attr, "text_rotate");
        if (auto r = from_string<TextRotation>(rot)) t.rotation = *r;
        b.text_attributes = t;
      }
      if (auto it = d.find("line_with_spans"); it != d.end() && it->is_array()) {
        for (const auto& s : *it) {
          auto sc = native_category(json_string_or(s, "category_type"));
          if (!sc || !is_span_level(*sc)) continue;
          Span span;
          span.category = *sc;
          span.bbox = native_bbox(s).value_or(BBox{});
          span.content = json_string_or(s, "text", json_string_or(s, "latex"));
          b.spans.push_back(std::move(span));
        }
      }
      page.blocks.push_back(std::move(b));
    }
    ds.pages.push_back(std::move(page));
  }
  return ds;
}

}  // namespace docparse_eval
