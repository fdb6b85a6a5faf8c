#include "docparse_eval/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/metrics.hpp"
#include "docparse_eval/unicode.hpp"

namespace docparse_eval {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::pair<Task, std::string_view>, 7> kTaskNames{{
    {Task::end2end, "end2end"},
    {Task::ocr, "ocr"},
    {Task::table, "table"},
    {Task::formula, "formula"},
    {Task::layout, "layout"},
    {Task::stats, "stats"},
    {Task::validate, "validate"},
}};

// Blocks of the page in reading order: ordered ones by order, then the rest
// in file order.
std::vector<std::size_t> reading_sequence(const GroundTruthPage& page) {
  std::vector<std::size_t> ordered;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < page.blocks.size(); ++i) {
    (page.blocks[i].order ? ordered : rest).push_back(i);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [&](std::size_t a, std::size_t b) { return *page.blocks[a].order < *page.blocks[b].order; });
  ordered.insert(ordered.end(), rest.begin(), rest.end());
  return ordered;
}

std::string formula_text(std::string_view latex) { return u32_to_utf8(collapse_whitespace(utf8_to_u32(trim(latex)))); }

std::string canonical_table(std::string_view html) { return serialize_table(parse_html_table(html)); }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Parses a JSON list or JSON Lines document into objects.
std::vector<json> read_records(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<json> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;
  if (text[first] == '[') {
    try {
      for (auto& j : json::parse(text)) out.push_back(std::move(j));
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ": invalid JSON: " + e.what());
    }
    return out;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw InputError(path.string() + ": line " + std::to_string(n) + ": invalid JSON: " + e.what());
    }
  }
  return out;
}

std::string string_field(const json& j, const char* key, const fs::path& path, std::size_t index) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw InputError(path.string() + ": record " + std::to_string(index + 1) + ": missing string field '" + key + "'");
  }
  return j[key].get<std::string>();
}

bool scored_block(const Block& b, Component component, const EvalOptions& options) {
  return component_of(b.category) == component && b.content && !is_masked(b.category) &&
         options.ignore.count(b.category) == 0;
}

}  // namespace

std::string_view to_string(Task t) {
  for (const auto& [task, name] : kTaskNames) {
    if (task == t) return name;
  }
  return "?";
}

std::optional<Task> task_from_string(std::string_view s) {
  for (const auto& [task, name] : kTaskNames) {
    if (name == s) return task;
  }
  return std::nullopt;
}

std::vector<MatchUnit> gt_text_units(const GroundTruthPage& page) {
  std::vector<MatchUnit> units;
  for (std::size_t i : reading_sequence(page)) {
    const Block& b = page.blocks[i];
    if (component_of(b.category) != Component::text || !b.content) continue;
    std::string text = normalize_text(*b.content);
    if (!text.empty()) units.push_back({b.id, std::move(text), i});
  }
  return units;
}

std::vector<MatchUnit> gt_formula_units(const GroundTruthPage& page) {
  std::vector<MatchUnit> units;
  for (std::size_t i : reading_sequence(page)) {
    const Block& b = page.blocks[i];
    if (component_of(b.category) != Component::formula || !b.content) continue;
    std::string text = formula_text(*b.content);
    if (!text.empty()) units.push_back({b.id, std::move(text), i});
  }
  return units;
}

std::vector<MatchUnit> gt_table_units(const GroundTruthPage& page, std::vector<std::string>* warnings) {
  std::vector<MatchUnit> units;
  for (std::size_t i : reading_sequence(page)) {
    const Block& b = page.blocks[i];
    if (component_of(b.category) != Component::table || !b.content) continue;
    try {
      units.push_back({b.id, canonical_table(*b.content), i});
    } catch (const InputError& e) {
      if (warnings) warnings->push_back(page.page_id + ": table " + b.id + " skipped: " + e.what());
    }
  }
  return units;
}

std::vector<MatchUnit> pred_text_units(const ExtractedDoc& doc) {
  std::vector<MatchUnit> units;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    if (e.kind != ElementKind::text_paragraph && e.kind != ElementKind::code_block) continue;
    if (e.content.empty()) continue;
    units.push_back({"e" + std::to_string(i), e.content, i});
  }
  return units;
}

std::vector<MatchUnit> pred_formula_units(const ExtractedDoc& doc) {
  std::vector<MatchUnit> units;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    if (e.kind != ElementKind::display_formula) continue;
    units.push_back({"e" + std::to_string(i), formula_text(e.content), i});
  }
  return units;
}

std::vector<MatchUnit> pred_table_units(const ExtractedDoc& doc) {
  std::vector<MatchUnit> units;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const auto& e = doc.elements[i];
    if (e.kind != ElementKind::table_html) continue;
    std::string text;
    try {
      text = canonical_table(e.content);
    } catch (const InputError&) {
      text = e.content;
    }
    units.push_back({"e" + std::to_string(i), std::move(text), i});
  }
  return units;
}

ComponentMatches match_page(const GroundTruthPage& page, const ExtractedDoc& doc, const EvalOptions& options,
                            std::vector<std::string>* warnings) {
  ComponentMatches m;
  {
    auto gt = gt_text_units(page);
    auto pred = pred_text_units(doc);
    const MatchResult r = adjacency_search_match(gt, pred, options.match);
    m.text = apply_ignore_rules(page, std::move(gt), std::move(pred), r, options.ignore, options.match);
  }
  {
    auto gt = gt_formula_units(page);
    auto pred = pred_formula_units(doc);
    const MatchResult r = adjacency_search_match(gt, pred, options.match);
    m.formula = apply_ignore_rules(page, std::move(gt), std::move(pred), r, options.ignore, options.match);
  }
  {
    auto gt = gt_table_units(page, warnings);
    auto pred = pred_table_units(doc);
    std::vector<std::string> gt_texts, pred_texts;
    for (const auto& u : gt) gt_texts.push_back(u.text);
    for (const auto& u : pred) pred_texts.push_back(u.text);
    const MatchResult r = one_to_one_match(distance_matrix(gt_texts, pred_texts));
    m.table = apply_ignore_rules(page, std::move(gt), std::move(pred), r, options.ignore, options.match);
  }
  return m;
}

PageEvaluation evaluate_page(const GroundTruthPage& page, const std::optional<std::string>& markdown,
                             const EvalOptions& options) {
  PageEvaluation out;
  if (!markdown) out.warnings.push_back(page.page_id + ": no prediction, scored as empty");
  const std::string prepared = preprocess(markdown.value_or(std::string()), options.repeat_cap);
  const ExtractedDoc doc = extract_elements(prepared);
  for (const auto& w : doc.warnings) out.warnings.push_back(page.page_id + ": " + w);
  const ComponentMatches matches = match_page(page, doc, options, &out.warnings);
  out.scores = page_scores(page, matches, doc);
  return out;
}

void restrict_to_component(PageScores& scores, Component component) {
  std::erase_if(scores.entries, [&](const ScoreEntry& e) { return e.component != component; });
  summarize_entries(scores);
  scores.read_order_edit.reset();
}

PageEvaluation evaluate_blocks(const GroundTruthPage& page, Component component,
                               const std::map<std::string, std::string>& predictions_by_block,
                               const EvalOptions& options) {
  PageEvaluation out;
  out.scores.page_id = page.page_id;
  out.scores.attributes = page.attributes;
  const PairMetric cdm = metric_registry().get("cdm");
  for (std::size_t i : reading_sequence(page)) {
    const Block& b = page.blocks[i];
    if (!scored_block(b, component, options)) continue;
    ScoreEntry e;
    e.component = component;
    e.blocks = {{b.id, b.category, b.text_attributes, b.table_attributes}};
    const auto it = predictions_by_block.find(b.id);
    e.matched = it != predictions_by_block.end();
    switch (component) {
      case Component::text:
        e.edit = e.matched ? normalized_edit_distance(normalize_text(*b.content), normalize_text(it->second)) : 1.0;
        break;
      case Component::formula: {
        if (e.matched) {
          const std::string gt = formula_text(*b.content);
          const std::string pred = formula_text(it->second);
          e.edit = normalized_edit_distance(gt, pred);
          e.bleu = bleu(gt, pred);
          if (cdm) e.cdm = std::clamp(cdm(gt, pred), 0.0, 1.0);
        } else {
          e.edit = 1.0;
          e.bleu = 0.0;
          if (cdm) e.cdm = 0.0;
        }
        break;
      }
      case Component::table: {
        TableTree gt;
        try {
          gt = parse_html_table(*b.content);
        } catch (const InputError& err) {
          out.warnings.push_back(page.page_id + ": table " + b.id + " skipped: " + err.what());
          continue;
        }
        e.edit = 1.0;
        e.teds = 0.0;
        if (e.matched) {
          try {
            const TableTree pred = parse_html_table(it->second);
            e.teds = teds(gt, pred);
            e.edit = normalized_edit_distance(serialize_table(gt), serialize_table(pred));
          } catch (const InputError&) {
            out.warnings.push_back(page.page_id + ": table " + b.id + ": prediction is not a table");
          }
        }
        break;
      }
      case Component::none: continue;
    }
    if (!e.matched) out.warnings.push_back(page.page_id + ": no prediction for block " + b.id);
    out.scores.entries.push_back(std::move(e));
  }
  summarize_entries(out.scores);
  return out;
}

PredictionSource PredictionSource::open(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    PredictionSource s;
    s.directory_ = path;
    return s;
  }
  if (!fs::exists(path, ec)) throw InputError("prediction path '" + path.string() + "' does not exist");
  std::map<std::string, std::string> md;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    md[string_field(records[i], "page_id", path, i)] = string_field(records[i], "markdown", path, i);
  }
  return from_map(std::move(md));
}

PredictionSource PredictionSource::from_map(std::map<std::string, std::string> markdown) {
  PredictionSource s;
  s.inline_ = std::move(markdown);
  return s;
}

std::optional<std::string> PredictionSource::markdown(const std::string& page_id) const {
  if (directory_.empty()) {
    const auto it = inline_.find(page_id);
    if (it == inline_.end()) return std::nullopt;
    return it->second;
  }
  std::error_code ec;
  for (const fs::path& candidate : {directory_ / (page_id + ".md"), directory_ / fs::path(page_id).stem().concat(".md")}) {
    if (fs::is_regular_file(candidate, ec)) return read_file(candidate);
  }
  return std::nullopt;
}

std::vector<BlockPrediction> load_block_predictions(const fs::path& path) {
  std::vector<BlockPrediction> out;
  const auto records = read_records(path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back({string_field(records[i], "page_id", path, i), string_field(records[i], "block_id", path, i),
                   string_field(records[i], "content", path, i)});
  }
  return out;
}

bool looks_like_block_predictions(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return false;
  const auto records = read_records(path);
  return !records.empty() && records.front().is_object() && records.front().contains("block_id");
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

CorpusResult fold(std::vector<PageEvaluation>&& evals) {
  CorpusResult r;
  for (auto& e : evals) {
    r.pages.push_back(std::move(e.scores));
    for (auto& w : e.warnings) r.warnings.push_back(std::move(w));
  }
  return r;
}

}  // namespace

CorpusResult evaluate_end2end(const Dataset& dataset, const PredictionSource& predictions, const EvalOptions& options,
                              unsigned jobs) {
  check_config(options.match);
  std::vector<PageEvaluation> evals(dataset.pages.size());
  parallel_for(dataset.pages.size(), jobs, [&](std::size_t i) {
    const auto& page = dataset.pages[i];
    evals[i] = evaluate_page(page, predictions.markdown(page.page_id), options);
  });
  return fold(std::move(evals));
}

CorpusResult evaluate_block_task(const Dataset& dataset, Component component,
                                 const std::vector<BlockPrediction>& predictions, const EvalOptions& options,
                                 unsigned jobs) {
  std::map<std::string, std::map<std::string, std::string>> by_page;
  for (const auto& p : predictions) {
    if (!dataset.find_page(p.page_id)) throw InputError("prediction for unknown page_id '" + p.page_id + "'");
    by_page[p.page_id][p.block_id] = p.content;
  }
  static const std::map<std::string, std::string> kNone;
  std::vector<PageEvaluation> evals(dataset.pages.size());
  parallel_for(dataset.pages.size(), jobs, [&](std::size_t i) {
    const auto& page = dataset.pages[i];
    const auto it = by_page.find(page.page_id);
    evals[i] = evaluate_blocks(page, component, it == by_page.end() ? kNone : it->second, options);
  });
  return fold(std::move(evals));
}

std::vector<Selector> default_group_by(Task task) {
  std::vector<std::string_view> names;
  switch (task) {
    case Task::end2end: names = {"pdf_type", "special_issues", "layout_type:read_order_edit"}; break;
    case Task::ocr: names = {"text_language", "text_background", "text_rotation"}; break;
    case Task::table:
      names = {"table_language", "table_frame", "table_merge_cell", "table_contains_formula",
               "table_colorful_background", "table_rotated"};
      break;
    default: break;
  }
  std::vector<Selector> out;
  for (auto n : names) out.push_back(parse_selector(n));
  return out;
}

EvalReport build_report(std::string task, std::vector<PageScores> pages, const std::vector<Selector>& group_by,
                        OverallMode mode) {
  EvalReport r;
  r.task = std::move(task);
  r.overall = overall_rows(pages, mode);
  for (const auto& s : group_by) r.groups.push_back(aggregate(pages, s));
  r.per_page = std::move(pages);
  return r;
}

}  // namespace docparse_eval
