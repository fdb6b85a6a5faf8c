#include "docparse_eval/reporter.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <functional>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/metrics.hpp"

namespace docparse_eval {

using nlohmann::json;

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

BlockRef block_ref(const GroundTruthPage& page, const MatchUnit& unit) {
  BlockRef ref;
  ref.id = unit.id;
  if (const Block* b = page.find_block(unit.id)) {
    ref.category = b->category;
    ref.text_attributes = b->text_attributes;
    ref.table_attributes = b->table_attributes;
  }
  return ref;
}

std::vector<BlockRef> block_refs(const GroundTruthPage& page, const FilteredMatch& m,
                                 const std::vector<std::size_t>& group) {
  std::vector<BlockRef> refs;
  for (std::size_t g : group) refs.push_back(block_ref(page, m.gt_units[g]));
  return refs;
}

void add_text_entries(const GroundTruthPage& page, const FilteredMatch& m, std::vector<ScoreEntry>& out) {
  for (const auto& p : m.pairs) {
    if (!p.scored) continue;
    ScoreEntry e;
    e.component = Component::text;
    e.blocks = block_refs(page, m, p.gt);
    e.edit = p.distance;
    out.push_back(std::move(e));
  }
  for (std::size_t g : m.unmatched_gt) {
    ScoreEntry e;
    e.component = Component::text;
    e.blocks = {block_ref(page, m.gt_units[g])};
    e.matched = false;
    e.edit = 1.0;
    out.push_back(std::move(e));
  }
}

void add_formula_entries(const GroundTruthPage& page, const FilteredMatch& m, std::vector<ScoreEntry>& out) {
  const PairMetric cdm = metric_registry().get("cdm");
  for (const auto& p : m.pairs) {
    if (!p.scored) continue;
    const std::string gt = join_group(m.gt_units, p.gt);
    const std::string pred = join_group(m.pred_units, p.pred);
    ScoreEntry e;
    e.component = Component::formula;
    e.blocks = block_refs(page, m, p.gt);
    e.edit = p.distance;
    e.bleu = bleu(gt, pred);
    if (cdm) e.cdm = std::clamp(cdm(gt, pred), 0.0, 1.0);
    out.push_back(std::move(e));
  }
  for (std::size_t g : m.unmatched_gt) {
    ScoreEntry e;
    e.component = Component::formula;
    e.blocks = {block_ref(page, m.gt_units[g])};
    e.matched = false;
    e.edit = 1.0;
    e.bleu = 0.0;
    if (cdm) e.cdm = 0.0;
    out.push_back(std::move(e));
  }
}

void add_table_entries(const GroundTruthPage& page, const FilteredMatch& m, std::vector<ScoreEntry>& out) {
  for (const auto& p : m.pairs) {
    if (!p.scored) continue;
    ScoreEntry e;
    e.component = Component::table;
    e.blocks = block_refs(page, m, p.gt);
    const std::string gt_html = join_group(m.gt_units, p.gt);
    const std::string pred_html = join_group(m.pred_units, p.pred);
    const TableTree gt = parse_html_table(gt_html);
    try {
      const TableTree pred = parse_html_table(pred_html);
      e.teds = teds(gt, pred);
      e.edit = normalized_edit_distance(serialize_table(gt), serialize_table(pred));
    } catch (const InputError&) {
      e.teds = 0.0;
      e.edit = 1.0;
    }
    out.push_back(std::move(e));
  }
  for (std::size_t g : m.unmatched_gt) {
    ScoreEntry e;
    e.component = Component::table;
    e.blocks = {block_ref(page, m.gt_units[g])};
    e.matched = false;
    e.edit = 1.0;
    e.teds = 0.0;
    out.push_back(std::move(e));
  }
}

bool has_ordered_units(const GroundTruthPage& page, const FilteredMatch& m) {
  for (std::size_t k = 0; k < m.gt_units.size(); ++k) {
    if (k < m.gt_ignored.size() && m.gt_ignored[k]) continue;
    const Block* b = page.find_block(m.gt_units[k].id);
    if (b && b->order) return true;
  }
  return false;
}

std::optional<double> page_metric(const PageScores& p, Metric m) {
  switch (m) {
    case Metric::text_edit: return p.text_edit;
    case Metric::formula_edit: return p.formula_edit;
    case Metric::formula_bleu: return p.formula_bleu;
    case Metric::formula_cdm: return p.formula_cdm;
    case Metric::table_teds: return p.table_teds;
    case Metric::table_edit: return p.table_edit;
    case Metric::read_order_edit: return p.read_order_edit;
  }
  return std::nullopt;
}

std::optional<double> entry_metric(const ScoreEntry& e, Metric m) {
  switch (m) {
    case Metric::text_edit: return e.component == Component::text ? std::optional(e.edit) : std::nullopt;
    case Metric::formula_edit: return e.component == Component::formula ? std::optional(e.edit) : std::nullopt;
    case Metric::formula_bleu: return e.component == Component::formula ? e.bleu : std::nullopt;
    case Metric::formula_cdm: return e.component == Component::formula ? e.cdm : std::nullopt;
    case Metric::table_teds: return e.component == Component::table ? e.teds : std::nullopt;
    case Metric::table_edit: return e.component == Component::table ? std::optional(e.edit) : std::nullopt;
    case Metric::read_order_edit: return std::nullopt;
  }
  return std::nullopt;
}

constexpr std::array<std::pair<Metric, std::string_view>, 7> kMetricNames{{
    {Metric::text_edit, "text_edit"},
    {Metric::formula_edit, "formula_edit"},
    {Metric::formula_bleu, "formula_bleu"},
    {Metric::formula_cdm, "formula_cdm"},
    {Metric::table_teds, "table_teds"},
    {Metric::table_edit, "table_edit"},
    {Metric::read_order_edit, "read_order_edit"},
}};

// Attribute value(s) of a page or block for a selector. Returns the group
// keys the item belongs to; empty when the attribute does not apply.
using PageKeys = std::function<std::vector<std::string>(const PageAttributes&)>;
using BlockKeys = std::function<std::optional<std::string>(const BlockRef&)>;

std::string bool_key(bool b) { return b ? "true" : "false"; }

template <class E>
std::vector<std::string> vocabulary() {
  std::vector<std::string> out;
  for (E e : all_values<E>()) out.emplace_back(to_string(e));
  return out;
}

struct AttributeDef {
  std::string_view name;
  bool block_level;
  Metric default_metric;
  std::vector<Metric> allowed;  // empty: any metric
  std::function<std::vector<std::string>()> keys;  // vocabulary order
  PageKeys page_keys;
  BlockKeys block_keys;
};

const std::vector<AttributeDef>& attribute_defs() {
  static const std::vector<AttributeDef> defs = [] {
    const std::vector<Metric> text_only{Metric::text_edit};
    const std::vector<Metric> table_only{Metric::table_teds, Metric::table_edit};
    auto bools = [] { return std::vector<std::string>{"true", "false"}; };
    auto text_attr = [](auto get) -> BlockKeys {
      return [get](const BlockRef& b) -> std::optional<std::string> {
        if (!b.text_attributes) return std::nullopt;
        return get(*b.text_attributes);
      };
    };
    auto table_attr = [](auto get) -> BlockKeys {
      return [get](const BlockRef& b) -> std::optional<std::string> {
        if (!b.table_attributes) return std::nullopt;
        return get(*b.table_attributes);
      };
    };
    std::vector<AttributeDef> d;
    d.push_back({"pdf_type", false, Metric::text_edit, {}, vocabulary<PdfType>,
                 [](const PageAttributes& a) { return std::vector{std::string(to_string(a.pdf_type))}; }, {}});
    d.push_back({"layout_type", false, Metric::text_edit, {}, vocabulary<LayoutType>,
                 [](const PageAttributes& a) { return std::vector{std::string(to_string(a.layout_type))}; }, {}});
    d.push_back({"language", false, Metric::text_edit, {}, vocabulary<Language>,
                 [](const PageAttributes& a) { return std::vector{std::string(to_string(a.language))}; }, {}});
    d.push_back({"special_issues", false, Metric::text_edit, {},
                 [] {
                   auto v = vocabulary<SpecialIssue>();
                   v.emplace_back("none");
                   return v;
                 },
                 [](const PageAttributes& a) {
                   std::vector<std::string> keys;
                   for (SpecialIssue s : a.special_issues) keys.emplace_back(to_string(s));
                   if (keys.empty()) keys.emplace_back("none");
                   return keys;
                 },
                 {}});
    d.push_back({"text_language", true, Metric::text_edit, text_only, vocabulary<Language>, {},
                 text_attr([](const TextAttributes& t) { return std::string(to_string(t.language)); })});
    d.push_back({"text_background", true, Metric::text_edit, text_only, vocabulary<TextBackground>, {},
                 text_attr([](const TextAttributes& t) { return std::string(to_string(t.background)); })});
    d.push_back({"text_rotation", true, Metric::text_edit, text_only, vocabulary<TextRotation>, {},
                 text_attr([](const TextAttributes& t) { return std::string(to_string(t.rotation)); })});
    d.push_back({"table_language", true, Metric::table_teds, table_only, vocabulary<Language>, {},
                 table_attr([](const TableAttributes& t) { return std::string(to_string(t.language)); })});
    d.push_back({"table_frame", true, Metric::table_teds, table_only, vocabulary<TableFrame>, {},
                 table_attr([](const TableAttributes& t) { return std::string(to_string(t.frame)); })});
    d.push_back({"table_merge_cell", true, Metric::table_teds, table_only, bools, {},
                 table_attr([](const TableAttributes& t) { return bool_key(t.merge_cell); })});
    d.push_back({"table_contains_formula", true, Metric::table_teds, table_only, bools, {},
                 table_attr([](const TableAttributes& t) { return bool_key(t.contains_formula); })});
    d.push_back({"table_colorful_background", true, Metric::table_teds, table_only, bools, {},
                 table_attr([](const TableAttributes& t) { return bool_key(t.colorful_background); })});
    d.push_back({"table_rotated", true, Metric::table_teds, table_only, bools, {},
                 table_attr([](const TableAttributes& t) { return bool_key(t.rotated); })});
    return d;
  }();
  return defs;
}

const AttributeDef& attribute_def(std::string_view name) {
  for (const auto& d : attribute_defs()) {
    if (d.name == name) return d;
  }
  throw InputError("unknown group-by attribute '" + std::string(name) + "'");
}

GroupStats stats_of(std::string key, const std::vector<double>& values) {
  GroupStats g;
  g.key = std::move(key);
  g.count = values.size();
  g.mean = *mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.variance = ss / static_cast<double>(values.size());
  return g;
}

}  // namespace

PageScores page_scores(const GroundTruthPage& page, const ComponentMatches& matches, const ExtractedDoc& extracted) {
  PageScores s;
  s.page_id = page.page_id;
  s.attributes = page.attributes;
  add_text_entries(page, matches.text, s.entries);
  add_formula_entries(page, matches.formula, s.entries);
  add_table_entries(page, matches.table, s.entries);
  summarize_entries(s);
  if (has_ordered_units(page, matches.text)) s.read_order_edit = reading_order_score(page, matches.text, extracted);
  return s;
}

void summarize_entries(PageScores& s) {
  std::vector<double> text, f_edit, f_bleu, f_cdm, t_teds, t_edit;
  for (const auto& e : s.entries) {
    switch (e.component) {
      case Component::text: text.push_back(e.edit); break;
      case Component::formula:
        f_edit.push_back(e.edit);
        if (e.bleu) f_bleu.push_back(*e.bleu);
        if (e.cdm) f_cdm.push_back(*e.cdm);
        break;
      case Component::table:
        t_edit.push_back(e.edit);
        if (e.teds) t_teds.push_back(*e.teds);
        break;
      case Component::none: break;
    }
  }
  s.text_edit = mean_of(text);
  s.formula_edit = mean_of(f_edit);
  s.formula_bleu = mean_of(f_bleu);
  s.formula_cdm = mean_of(f_cdm);
  s.table_teds = mean_of(t_teds);
  s.table_edit = mean_of(t_edit);
}

std::string_view to_string(Metric m) {
  for (const auto& [metric, name] : kMetricNames) {
    if (metric == m) return name;
  }
  return "?";
}

std::optional<Metric> metric_from_string(std::string_view name) {
  for (const auto& [metric, n] : kMetricNames) {
    if (n == name) return metric;
  }
  return std::nullopt;
}

bool is_percentage(Metric m) {
  return m == Metric::table_teds || m == Metric::formula_bleu || m == Metric::formula_cdm;
}

std::string Selector::label() const { return attribute + ":" + std::string(to_string(metric)); }

Selector parse_selector(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view attr = text.substr(0, colon);
  const AttributeDef& def = attribute_def(attr);
  Selector s;
  s.attribute = std::string(attr);
  s.block_level = def.block_level;
  s.metric = def.default_metric;
  if (colon != std::string_view::npos) {
    const std::string_view mname = text.substr(colon + 1);
    const auto m = metric_from_string(mname);
    if (!m) throw InputError("unknown metric '" + std::string(mname) + "' in group-by '" + std::string(text) + "'");
    if (!def.allowed.empty() && std::find(def.allowed.begin(), def.allowed.end(), *m) == def.allowed.end()) {
      throw InputError("metric '" + std::string(mname) + "' does not apply to attribute '" + s.attribute + "'");
    }
    s.metric = *m;
  }
  return s;
}

GroupTable aggregate(const std::vector<PageScores>& pages, const Selector& selector) {
  const AttributeDef& def = attribute_def(selector.attribute);
  std::map<std::string, std::vector<double>> values;
  if (def.block_level) {
    for (const auto& p : pages) {
      for (const auto& e : p.entries) {
        const auto v = entry_metric(e, selector.metric);
        if (!v || e.blocks.empty()) continue;
        // A merged group counts once, under its first block.
        if (const auto key = def.block_keys(e.blocks.front())) values[*key].push_back(*v);
      }
    }
  } else {
    for (const auto& p : pages) {
      const auto v = page_metric(p, selector.metric);
      if (!v) continue;
      for (const auto& key : def.page_keys(p.attributes)) values[key].push_back(*v);
    }
  }
  GroupTable t;
  t.selector = selector;
  for (const auto& key : def.keys()) {
    auto it = values.find(key);
    if (it == values.end() || it->second.empty()) continue;
    t.groups.push_back(stats_of(key, it->second));
  }
  return t;
}

std::optional<OverallMode> overall_mode_from_string(std::string_view s) {
  if (s == "component-mean" || s == "component_mean") return OverallMode::component_mean;
  if (s == "pair-pooled" || s == "pair_pooled") return OverallMode::pair_pooled;
  return std::nullopt;
}

std::string_view to_string(OverallMode m) { return m == OverallMode::component_mean ? "component-mean" : "pair-pooled"; }

OverallRow overall(const std::vector<PageScores>& pages, std::string slice, OverallMode mode) {
  OverallRow row;
  row.slice = std::move(slice);
  row.pages = pages.size();

  std::vector<double> read_order;
  for (const auto& p : pages) {
    if (p.read_order_edit) read_order.push_back(*p.read_order_edit);
  }
  row.read_order_edit = mean_of(read_order);

  if (mode == OverallMode::component_mean) {
    auto collect = [&](Metric m) {
      std::vector<double> v;
      for (const auto& p : pages) {
        if (auto x = page_metric(p, m)) v.push_back(*x);
      }
      return mean_of(v);
    };
    row.text_edit = collect(Metric::text_edit);
    row.formula_edit = collect(Metric::formula_edit);
    row.formula_bleu = collect(Metric::formula_bleu);
    row.formula_cdm = collect(Metric::formula_cdm);
    row.table_teds = collect(Metric::table_teds);
    row.table_edit = collect(Metric::table_edit);
    std::vector<double> parts;
    for (const auto& c : {row.text_edit, row.formula_edit, row.table_edit, row.read_order_edit}) {
      if (c) parts.push_back(*c);
    }
    row.overall_edit = mean_of(parts);
  } else {
    std::map<Metric, std::vector<double>> pooled;
    std::vector<double> all_edits = read_order;
    for (const auto& p : pages) {
      for (const auto& e : p.entries) {
        for (const auto& [m, name] : kMetricNames) {
          if (auto v = entry_metric(e, m)) pooled[m].push_back(*v);
        }
        all_edits.push_back(e.edit);
      }
    }
    row.text_edit = mean_of(pooled[Metric::text_edit]);
    row.formula_edit = mean_of(pooled[Metric::formula_edit]);
    row.formula_bleu = mean_of(pooled[Metric::formula_bleu]);
    row.formula_cdm = mean_of(pooled[Metric::formula_cdm]);
    row.table_teds = mean_of(pooled[Metric::table_teds]);
    row.table_edit = mean_of(pooled[Metric::table_edit]);
    row.overall_edit = mean_of(all_edits);
  }
  if (!row.text_edit) row.missing.emplace_back("text_edit");
  if (!row.formula_edit) row.missing.emplace_back("formula_edit");
  if (!row.table_edit) row.missing.emplace_back("table_edit");
  if (!row.read_order_edit) row.missing.emplace_back("read_order_edit");
  return row;
}

std::vector<OverallRow> overall_rows(const std::vector<PageScores>& pages, OverallMode mode) {
  std::vector<OverallRow> rows;
  for (Language lang : all_values<Language>()) {
    std::vector<PageScores> slice;
    for (const auto& p : pages) {
      if (p.attributes.language == lang) slice.push_back(p);
    }
    if (!slice.empty()) rows.push_back(overall(slice, std::string(to_string(lang)), mode));
  }
  rows.push_back(overall(pages, "all", mode));
  return rows;
}

std::optional<Format> format_from_string(std::string_view s) {
  if (s == "md") return Format::md;
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  return std::nullopt;
}

std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // no "-0.000"
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
  std::string out(buf.data(), res.ptr);
  if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') out.erase(0, 1);
  return out;
}

namespace {

// Display conventions: edit distances as 3-decimal fractions, TEDS and CDM
// as percentages with 1 decimal, BLEU as a percentage with 2 decimals.
std::string show(Metric m, const std::optional<double>& v) {
  if (!v) return "-";
  switch (m) {
    case Metric::table_teds:
    case Metric::formula_cdm: return format_fixed(*v * 100.0, 1);
    case Metric::formula_bleu: return format_fixed(*v * 100.0, 2);
    default: return format_fixed(*v, 3);
  }
}

std::string show_variance(Metric m, double v) {
  if (is_percentage(m)) return format_fixed(v * 10000.0, 2);
  return format_fixed(v, 4);
}

std::string show_ap(double v) { return format_fixed(v * 100.0, 1); }

std::vector<std::pair<Metric, std::optional<double>>> row_metrics(const OverallRow& r) {
  return {{Metric::text_edit, r.text_edit},         {Metric::formula_edit, r.formula_edit},
          {Metric::formula_bleu, r.formula_bleu},   {Metric::formula_cdm, r.formula_cdm},
          {Metric::table_teds, r.table_teds},       {Metric::table_edit, r.table_edit},
          {Metric::read_order_edit, r.read_order_edit}};
}

std::vector<std::pair<Metric, std::optional<double>>> page_metrics(const PageScores& p) {
  return {{Metric::text_edit, p.text_edit},       {Metric::formula_edit, p.formula_edit},
          {Metric::formula_bleu, p.formula_bleu}, {Metric::formula_cdm, p.formula_cdm},
          {Metric::table_teds, p.table_teds},     {Metric::table_edit, p.table_edit},
          {Metric::read_order_edit, p.read_order_edit}};
}

bool any_cdm(const EvalReport& r) {
  return std::any_of(r.overall.begin(), r.overall.end(), [](const OverallRow& o) { return o.formula_cdm.has_value(); });
}

std::string render_md(const EvalReport& r) {
  std::string out;
  const bool cdm = any_cdm(r);
  if (!r.overall.empty()) {
    out += "## Overall";
    if (!r.task.empty()) out += " (" + r.task + ")";
    out += "\n\n| slice | pages | text_edit | formula_edit | formula_bleu |";
    if (cdm) out += " formula_cdm |";
    out += " table_teds | table_edit | read_order_edit | overall_edit |\n|---|---:|---:|---:|---:|";
    if (cdm) out += "---:|";
    out += "---:|---:|---:|---:|\n";
    for (const auto& row : r.overall) {
      out += "| " + row.slice + " | " + std::to_string(row.pages) + " |";
      for (const auto& [m, v] : row_metrics(row)) {
        if (m == Metric::formula_cdm && !cdm) continue;
        out += " " + show(m, v) + " |";
      }
      out += " " + show(Metric::text_edit, row.overall_edit) + " |\n";
    }
    bool noted = false;
    for (const auto& row : r.overall) {
      if (row.missing.empty()) continue;
      if (!noted) out += "\n";
      noted = true;
      out += "Missing in " + row.slice + ":";
      for (const auto& m : row.missing) out += " " + m;
      out += " (overall_edit averages the rest)\n";
    }
    out += "\n";
  }
  for (const auto& g : r.groups) {
    out += "## Group: " + g.selector.label() + "\n\n| " + g.selector.attribute +
           " | count | mean | variance |\n|---|---:|---:|---:|\n";
    for (const auto& s : g.groups) {
      out += "| " + s.key + " | " + std::to_string(s.count) + " | " + show(g.selector.metric, s.mean) + " | " +
             show_variance(g.selector.metric, s.variance) + " |\n";
    }
    out += "\n";
  }
  if (r.layout) {
    out += "## Layout AP\n\n| category | AP |\n|---|---:|\n";
    for (const auto& [c, v] : r.layout->per_category) out += "| " + std::string(to_string(c)) + " | " + show_ap(v) + " |\n";
    out += "| mAP | " + show_ap(r.layout->map) + " |\n\n| pdf_type | mAP |\n|---|---:|\n";
    for (const auto& [t, v] : r.layout->per_pdf_type) out += "| " + t + " | " + show_ap(v) + " |\n";
    out += "\n";
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

constexpr std::string_view kCsvHeader =
    "kind,attr,key,count,text_edit,formula_edit,formula_bleu,formula_cdm,table_teds,table_edit,read_order_edit,"
    "overall_edit,metric,mean,variance\n";

std::string csv_metrics(const std::vector<std::pair<Metric, std::optional<double>>>& ms) {
  std::string out;
  for (const auto& [m, v] : ms) out += "," + (v ? show(m, v) : std::string());
  return out;
}

std::string render_csv(const EvalReport& r) {
  std::string out(kCsvHeader);
  for (const auto& p : r.per_page) {
    out += "page,page_id," + csv_field(p.page_id) + ",1" + csv_metrics(page_metrics(p)) + ",,,,\n";
  }
  for (const auto& row : r.overall) {
    out += "overall,language," + csv_field(row.slice) + "," + std::to_string(row.pages) + csv_metrics(row_metrics(row)) +
           "," + (row.overall_edit ? show(Metric::text_edit, row.overall_edit) : std::string()) + ",,,\n";
  }
  for (const auto& g : r.groups) {
    for (const auto& s : g.groups) {
      out += "group," + g.selector.attribute + "," + csv_field(s.key) + "," + std::to_string(s.count) + ",,,,,,,,," +
             std::string(to_string(g.selector.metric)) + "," + show(g.selector.metric, s.mean) + "," +
             show_variance(g.selector.metric, s.variance) + "\n";
    }
  }
  if (r.layout) {
    for (const auto& [c, v] : r.layout->per_category) {
      out += "layout,category," + std::string(to_string(c)) + ",,,,,,,,,,ap," + show_ap(v) + ",\n";
    }
    for (const auto& [t, v] : r.layout->per_pdf_type) out += "layout,pdf_type," + t + ",,,,,,,,,,map," + show_ap(v) + ",\n";
    out += "layout,all,all,,,,,,,,,,map," + show_ap(r.layout->map) + ",\n";
  }
  return out;
}

void put(json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}

json page_attributes_json(const PageAttributes& a) {
  json j;
  j["pdf_type"] = to_string(a.pdf_type);
  j["layout_type"] = to_string(a.layout_type);
  j["language"] = to_string(a.language);
  json issues = json::array();
  for (SpecialIssue s : a.special_issues) issues.push_back(to_string(s));
  j["special_issues"] = issues;
  return j;
}

}  // namespace

json to_json(const EvalReport& r) {
  json j;
  j["task"] = r.task;
  json pages = json::array();
  for (const auto& p : r.per_page) {
    json pj;
    pj["page_id"] = p.page_id;
    pj["attributes"] = page_attributes_json(p.attributes);
    for (const auto& [m, v] : page_metrics(p)) {
      if (v) pj[std::string(to_string(m))] = *v;
    }
    pj["entries"] = p.entries.size();
    pages.push_back(std::move(pj));
  }
  j["per_page"] = pages;
  json ov = json::object();
  for (const auto& row : r.overall) {
    json rj;
    rj["pages"] = row.pages;
    for (const auto& [m, v] : row_metrics(row)) {
      if (v) rj[std::string(to_string(m))] = *v;
    }
    put(rj, "overall_edit", row.overall_edit);
    rj["missing"] = row.missing;
    ov[row.slice] = rj;
  }
  j["overall"] = ov;
  json groups = json::object();
  for (const auto& g : r.groups) {
    json arr = json::array();
    for (const auto& s : g.groups) arr.push_back({{"key", s.key}, {"mean", s.mean}, {"variance", s.variance}, {"count", s.count}});
    groups[g.selector.label()] = arr;
  }
  j["groups"] = groups;
  if (r.layout) j["layout"] = to_json(*r.layout);
  return j;
}

std::string render(const EvalReport& report, Format format) {
  switch (format) {
    case Format::md: return render_md(report);
    case Format::csv: return render_csv(report);
    case Format::json: return to_json(report).dump(2) + "\n";
  }
  throw InputError("unknown report format");
}

}  // namespace docparse_eval
