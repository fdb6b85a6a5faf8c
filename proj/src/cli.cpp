#include "docparse_eval/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/errors.hpp"
#include "docparse_eval/layout_eval.hpp"
#include "docparse_eval/pipeline.hpp"
#include "docparse_eval/reporter.hpp"

namespace docparse_eval {

namespace {

enum class LogLevel { quiet, warn, info, debug };

LogLevel log_level() {
  const char* env = std::getenv("DOCPARSE_EVAL_LOG");
  if (!env) return LogLevel::warn;
  const std::string v(env);
  if (v == "quiet" || v == "off" || v == "error" || v == "0") return LogLevel::quiet;
  if (v == "info" || v == "2") return LogLevel::info;
  if (v == "debug" || v == "3") return LogLevel::debug;
  return LogLevel::warn;
}

class Log {
 public:
  Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void warn(const std::string& m) const { emit(LogLevel::warn, "warning", m); }
  void info(const std::string& m) const { emit(LogLevel::info, "info", m); }
  void debug(const std::string& m) const { emit(LogLevel::debug, "debug", m); }

 private:
  void emit(LogLevel at, const char* tag, const std::string& m) const {
    if (level_ >= at) err_ << tag << ": " << m << '\n';
  }
  std::ostream& err_;
  LogLevel level_;
};

std::vector<std::string> split_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t comma = std::min(item.find(',', start), item.size());
      std::string piece = item.substr(start, comma - start);
      if (!piece.empty()) out.push_back(std::move(piece));
      start = comma + 1;
    }
  }
  return out;
}

std::set<Category> parse_categories(const std::vector<std::string>& names) {
  std::set<Category> out;
  for (const auto& n : names) {
    if (n == "none") continue;
    const auto c = from_string<Category>(n);
    if (!c) throw InputError("unknown category '" + n + "'");
    out.insert(*c);
  }
  return out;
}

std::string render_stats(const StatsReport& stats, Format format) {
  switch (format) {
    case Format::json: return to_json(stats).dump(2) + "\n";
    case Format::csv: {
      std::string out = "table,key,count\n";
      out += "total,pages," + std::to_string(stats.pages) + "\n";
      out += "total,blocks," + std::to_string(stats.blocks) + "\n";
      out += "total,spans," + std::to_string(stats.spans) + "\n";
      for (const auto& t : stats.tables) {
        for (const auto& [k, v] : t.rows) out += t.name + "," + k + "," + std::to_string(v) + "\n";
      }
      return out;
    }
    case Format::md: {
      std::string out = "pages: " + std::to_string(stats.pages) + "\nblocks: " + std::to_string(stats.blocks) +
                        "\nspans: " + std::to_string(stats.spans) + "\n";
      for (const auto& t : stats.tables) {
        out += "\n## " + t.name + "\n\n| value | count |\n|---|---:|\n";
        for (const auto& [k, v] : t.rows) out += "| " + k + " | " + std::to_string(v) + " |\n";
      }
      return out;
    }
  }
  return {};
}

std::string render_findings(const ValidationReport& report, Format format) {
  if (format == Format::json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : report.findings) {
      arr.push_back({{"severity", to_string(f.severity)},
                     {"code", f.code},
                     {"page_id", f.page_id},
                     {"block_id", f.block_id},
                     {"field", f.field},
                     {"message", f.message}});
    }
    nlohmann::json j = {{"ok", report.ok()}, {"errors", report.error_count()},
                        {"warnings", report.warning_count()}, {"findings", arr}};
    return j.dump(2) + "\n";
  }
  std::string out;
  for (const auto& f : report.findings) {
    out += std::string(to_string(f.severity)) + " [" + f.code + "] page " + f.page_id;
    if (!f.block_id.empty()) out += " block " + f.block_id;
    if (!f.field.empty()) out += " field " + f.field;
    out += ": " + f.message + "\n";
  }
  out += std::to_string(report.error_count()) + " error(s), " + std::to_string(report.warning_count()) +
         " warning(s)\n";
  return out;
}

Component component_for(Task t) {
  switch (t) {
    case Task::ocr: return Component::text;
    case Task::table: return Component::table;
    case Task::formula: return Component::formula;
    default: return Component::none;
  }
}

struct Args {
  std::string task;
  std::string gt;
  std::string pred;
  std::string format = "md";
  std::string output;
  std::vector<std::string> group_by;
  double match_threshold = 0.7;
  double containment_ratio = 0.9;
  std::vector<std::string> iou_thresholds;
  std::vector<std::string> layout_exclude;
  std::string overall_mode = "component-mean";
  unsigned jobs = 1;
  std::vector<std::string> ignore_categories;
  bool ignore_given = false;
  std::size_t repeat_cap = kDefaultRepeatCap;
};

int run(const Args& a, std::ostream& out, const Log& log) {
  const auto task = task_from_string(a.task);
  if (!task) throw InputError("unknown task '" + a.task + "'");
  const auto format = format_from_string(a.format);
  if (!format) throw InputError("unknown format '" + a.format + "'");
  const auto mode = overall_mode_from_string(a.overall_mode);
  if (!mode) throw InputError("unknown overall mode '" + a.overall_mode + "'");

  std::ofstream file;
  if (!a.output.empty()) {
    file.open(a.output, std::ios::binary);
    if (!file) throw InputError("cannot write '" + a.output + "'");
  }
  std::ostream& sink = a.output.empty() ? out : file;
  const auto started = std::chrono::steady_clock::now();

  if (*task == Task::validate) {
    const Dataset ds = read_dataset_unchecked(a.gt);
    const ValidationReport report = validate(ds);
    sink << render_findings(report, *format);
    return report.ok() ? 0 : 1;
  }
  if (*task == Task::stats) {
    const Dataset ds = load_dataset(a.gt);
    sink << render_stats(dataset_stats(ds), *format);
    return 0;
  }

  if (a.pred.empty()) throw InputError("--pred is required for task " + a.task);
  const Dataset ds = load_dataset(a.gt);
  log.info("loaded " + std::to_string(ds.pages.size()) + " ground-truth pages");

  EvalReport report;
  if (*task == Task::layout) {
    LayoutConfig cfg;
    if (!a.iou_thresholds.empty()) {
      cfg.iou_thresholds.clear();
      for (const auto& t : split_list(a.iou_thresholds)) {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || end != t.data() + t.size()) throw InputError("invalid IoU threshold '" + t + "'");
        cfg.iou_thresholds.push_back(v);
      }
    }
    cfg.excluded = parse_categories(split_list(a.layout_exclude));
    report.task = "layout";
    report.layout = evaluate_map(ds, load_detections(a.pred), cfg);
  } else {
    EvalOptions opts;
    opts.match = {a.match_threshold, a.containment_ratio};
    check_config(opts.match);
    opts.repeat_cap = a.repeat_cap;
    if (a.ignore_given) opts.ignore = parse_categories(split_list(a.ignore_categories));

    std::vector<Selector> selectors;
    const auto names = split_list(a.group_by);
    if (names.empty()) {
      selectors = default_group_by(*task);
    } else {
      for (const auto& n : names) selectors.push_back(parse_selector(n));
    }

    CorpusResult result;
    if (*task != Task::end2end && looks_like_block_predictions(a.pred)) {
      result = evaluate_block_task(ds, component_for(*task), load_block_predictions(a.pred), opts, a.jobs);
    } else {
      result = evaluate_end2end(ds, PredictionSource::open(a.pred), opts, a.jobs);
      if (*task != Task::end2end) {
        for (auto& p : result.pages) restrict_to_component(p, component_for(*task));
      }
    }
    for (const auto& w : result.warnings) log.warn(w);
    report = build_report(std::string(to_string(*task)), std::move(result.pages), selectors, *mode);
  }
  sink << render(report, *format);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log.debug("finished in " + std::to_string(elapsed) + " s");
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evaluate document-parsing output against annotated ground truth"};
  app.name("docparse-eval");
  Args a;
  app.add_option("--task", a.task, "end2end | ocr | table | formula | layout | stats | validate")->required();
  app.add_option("--gt", a.gt, "ground-truth annotation file")->required()->check(CLI::ExistingFile);
  app.add_option("--pred", a.pred,
                 "prediction directory (<page_id>.md), markdown JSONL, block-prediction JSONL or detections file")
      ->check(CLI::ExistingPath);
  app.add_option("--format", a.format, "md | csv | json")->capture_default_str();
  app.add_option("--output,-o", a.output, "write the report here instead of stdout");
  app.add_option("--group-by", a.group_by, "attribute[:metric], repeatable or comma separated");
  app.add_option("--match-threshold", a.match_threshold, "minimum similarity for a match")->capture_default_str();
  app.add_option("--containment-ratio", a.containment_ratio, "fuzzy containment ratio for merge seeding")
      ->capture_default_str();
  app.add_option("--iou-thresholds", a.iou_thresholds, "comma separated IoU thresholds for layout mAP");
  app.add_option("--exclude-layout-categories", a.layout_exclude, "categories left out of mAP");
  app.add_option("--overall-mode", a.overall_mode, "component-mean | pair-pooled")->capture_default_str();
  app.add_option("--jobs,-j", a.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  auto* ignore = app.add_option("--ignore-categories", a.ignore_categories,
                                "categories matched but never scored ('none' for an empty set)");
  app.add_option("--repeat-cap", a.repeat_cap, "longest run of one repeated character kept (0 disables)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  a.ignore_given = ignore->count() > 0;

  const Log log(err, log_level());
  try {
    return run(a, out, log);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace docparse_eval
