#pragma once

// Page and corpus evaluation: extraction, matching and scoring wired
// together, plus prediction loading.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/md_extract.hpp"
#include "docparse_eval/reporter.hpp"

namespace docparse_eval {

enum class Task { end2end, ocr, table, formula, layout, stats, validate };

std::string_view to_string(Task t);
std::optional<Task> task_from_string(std::string_view s);

struct EvalOptions {
  MatchConfig match;
  std::set<Category> ignore = default_ignore_categories();
  std::size_t repeat_cap = kDefaultRepeatCap;
};

struct PageEvaluation {
  PageScores scores;
  std::vector<std::string> warnings;
};

// Matching units of one component on the ground-truth side, in reading
// order (ordered blocks first, then unordered ones in file order).
std::vector<MatchUnit> gt_text_units(const GroundTruthPage& page);
std::vector<MatchUnit> gt_formula_units(const GroundTruthPage& page);
// Table HTML is canonicalized; blocks whose HTML cannot be parsed are
// skipped with a warning.
std::vector<MatchUnit> gt_table_units(const GroundTruthPage& page, std::vector<std::string>* warnings = nullptr);

std::vector<MatchUnit> pred_text_units(const ExtractedDoc& doc);
std::vector<MatchUnit> pred_formula_units(const ExtractedDoc& doc);
std::vector<MatchUnit> pred_table_units(const ExtractedDoc& doc);

// Matches of every component for an already extracted prediction.
ComponentMatches match_page(const GroundTruthPage& page, const ExtractedDoc& doc, const EvalOptions& options,
                            std::vector<std::string>* warnings = nullptr);

// Full end-to-end evaluation of one page. A missing prediction scores as an
// empty document.
PageEvaluation evaluate_page(const GroundTruthPage& page, const std::optional<std::string>& markdown,
                             const EvalOptions& options = {});

// Keeps only the entries of `component` and drops the reading-order score.
void restrict_to_component(PageScores& scores, Component component);

// Block-level prediction for the direct ocr/table/formula tasks.
struct BlockPrediction {
  std::string page_id;
  std::string block_id;
  std::string content;
};

// Each scored GT block of the component is paired with the prediction that
// carries its block id; absent predictions are penalized.
PageEvaluation evaluate_blocks(const GroundTruthPage& page, Component component,
                               const std::map<std::string, std::string>& predictions_by_block,
                               const EvalOptions& options = {});

// Predicted markdown keyed by page id.
class PredictionSource {
 public:
  // A directory of `<page_id>.md` files (the page id's extension may be
  // replaced by `.md`), or a JSON Lines file of {"page_id", "markdown"}.
  static PredictionSource open(const std::filesystem::path& path);
  static PredictionSource from_map(std::map<std::string, std::string> markdown);

  // nullopt when the page has no prediction.
  std::optional<std::string> markdown(const std::string& page_id) const;

  bool is_directory() const { return !directory_.empty(); }

 private:
  std::filesystem::path directory_;
  std::map<std::string, std::string> inline_;
};

// JSON Lines (or a JSON list) of {"page_id", "block_id", "content"}.
std::vector<BlockPrediction> load_block_predictions(const std::filesystem::path& path);
bool looks_like_block_predictions(const std::filesystem::path& path);

// Runs `fn(i)` for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

struct CorpusResult {
  std::vector<PageScores> pages;  // dataset order
  std::vector<std::string> warnings;  // page order, deterministic
};

CorpusResult evaluate_end2end(const Dataset& dataset, const PredictionSource& predictions, const EvalOptions& options,
                              unsigned jobs = 1);

// Direct task evaluation on block predictions.
CorpusResult evaluate_block_task(const Dataset& dataset, Component component,
                                 const std::vector<BlockPrediction>& predictions, const EvalOptions& options,
                                 unsigned jobs = 1);

// Selectors used when none are given on the command line.
std::vector<Selector> default_group_by(Task task);

EvalReport build_report(std::string task, std::vector<PageScores> pages, const std::vector<Selector>& group_by,
                        OverallMode mode);

}  // namespace docparse_eval
