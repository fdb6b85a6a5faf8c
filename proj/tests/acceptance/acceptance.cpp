// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "docparse_eval/annotation.hpp"
#include "docparse_eval/cli.hpp"
#include "docparse_eval/layout_eval.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/md_extract.hpp"
#include "docparse_eval/metrics.hpp"
#include "docparse_eval/pipeline.hpp"
#include "docparse_eval/unicode.hpp"
#include "oracles.hpp"

using namespace docparse_eval;

namespace {

const std::string kFixtures = DOCPARSE_EVAL_FIXTURE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<MatchUnit> units(const std::vector<std::string>& texts, const std::string& prefix) {
  std::vector<MatchUnit> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({prefix + std::to_string(i), texts[i], i});
  return out;
}

int cli(std::vector<std::string> args, std::string& out) {
  args.insert(args.begin(), "docparse-eval");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  return code;
}

Outcome identity(const Dataset& ds) {
  Outcome r;
  std::vector<std::string> md;
  for (const auto& p : ds.pages) md.push_back(gt_page_to_markdown(p));
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t scored = 0;
  for (std::size_t i = 0; i < ds.pages.size(); ++i) {
    const PageScores s = evaluate_page(ds.pages[i], md[i]).scores;
    for (const auto& v : {s.text_edit, s.formula_edit, s.table_edit, s.read_order_edit}) {
      if (!v) continue;
      ++scored;
      if (*v != 0.0) r.fail(ds.pages[i].page_id + " edit " + fmt(*v));
    }
    if (s.table_teds && *s.table_teds != 1.0) r.fail(ds.pages[i].page_id + " teds " + fmt(*s.table_teds));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (ds.pages.size() < 50) r.fail("fewer than 50 fixture pages");
  if (secs >= 1.0) r.fail("took " + fmt(secs) + " s");
  if (r.pass) r.detail = std::to_string(ds.pages.size()) + " pages, " + std::to_string(scored) + " scores all exact, " + fmt(secs) + " s";
  return r;
}

Outcome edit_oracle() {
  Outcome r;
  std::mt19937 rng(1001);
  for (int i = 0; i < 1000 && r.pass; ++i) {
    const auto a = oracle::random_string(rng, 40);
    const auto b = oracle::random_string(rng, 40);
    if (normalized_edit_distance(a, b) != oracle::recursive_ned(a, b)) r.fail("mismatch on pair " + std::to_string(i));
  }
  for (int i = 0; i < 1000 && r.pass; ++i) {
    const auto a = oracle::random_string(rng, 40);
    const auto b = oracle::random_string(rng, 40);
    const auto c = oracle::random_string(rng, 40);
    if (normalized_edit_distance(a, b) != normalized_edit_distance(b, a)) r.fail("asymmetric on triple " + std::to_string(i));
    if (levenshtein(a, c) > levenshtein(a, b) + levenshtein(b, c)) r.fail("triangle violated on triple " + std::to_string(i));
  }
  if (r.pass) r.detail = "1000 pairs exact, 1000 triples symmetric and triangular";
  return r;
}

Outcome teds_oracle(const Dataset& ds) {
  Outcome r;
  std::mt19937 rng(2002);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const TableTree a = oracle::random_tree(rng, 6);
    const TableTree b = oracle::random_tree(rng, 6);
    worst = std::max(worst, std::abs(teds(a, b) - oracle::forest_teds(a, b)));
  }
  if (worst > 1e-9) r.fail("max deviation " + fmt(worst));
  std::size_t tables = 0;
  for (const auto& p : ds.pages) {
    for (const auto& b : p.blocks) {
      if (b.category != Category::table || !b.content) continue;
      ++tables;
      if (teds(*b.content, *b.content) != 1.0) r.fail("teds(t,t) != 1 for " + p.page_id + "/" + b.id);
    }
  }
  if (r.pass) r.detail = "500 trees, max deviation " + fmt(worst) + "; " + std::to_string(tables) + " fixture tables self-identical";
  return r;
}

Outcome matching_oracle() {
  Outcome r;
  std::mt19937 rng(3003);
  int exact = 0;
  int perturbed = 0;
  double worst_ratio = 1.0;
  for (int round = 0; round < 1000; ++round) {
    const bool perturb = round % 2 == 1;
    const auto c = oracle::synthetic_case(rng, perturb ? 2 : 0);
    if (c.gt.size() > 6 || c.pred.size() > 6) continue;
    const double opt = oracle::optimal_cost(c.gt, c.pred);
    const double got = match_cost(adjacency_search_match(units(c.gt, "g"), units(c.pred, "p")));
    if (!perturb) {
      ++exact;
      if (got > opt + 1e-12) r.fail("unperturbed cost " + fmt(got) + " > optimum " + fmt(opt) + ": " + oracle::describe(c));
    } else {
      ++perturbed;
      if (opt > 0) worst_ratio = std::max(worst_ratio, got / opt);
      if (got > opt * 1.10 + 1e-12) r.fail("perturbed cost " + fmt(got) + " vs optimum " + fmt(opt) + ": " + oracle::describe(c));
    }
  }
  if (r.pass) {
    r.detail = std::to_string(exact) + " unperturbed cases exact, " + std::to_string(perturbed) +
               " perturbed cases, worst cost ratio " + fmt(worst_ratio);
  }
  return r;
}

GroundTruthPage ordered_page(const std::vector<std::string>& paragraphs) {
  GroundTruthPage p;
  p.page_id = "order";
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    Block b;
    b.id = "b" + std::to_string(i);
    b.category = Category::text_block;
    b.bbox = {0, 20.0 * static_cast<double>(i), 100, 20.0 * static_cast<double>(i) + 10};
    b.content = paragraphs[i];
    b.order = static_cast<int>(i);
    p.blocks.push_back(b);
  }
  return p;
}

Outcome reading_order() {
  Outcome r;
  const std::vector<std::string> paras{"first paragraph of the page", "second paragraph follows here",
                                       "third paragraph with more words", "fourth and final paragraph"};
  const GroundTruthPage page = ordered_page(paras);
  auto score = [&](const std::vector<int>& perm, const std::string& sep) {
    std::string md;
    for (std::size_t k = 0; k < perm.size(); ++k) md += (k ? sep : "") + paras[static_cast<std::size_t>(perm[k])];
    return evaluate_page(page, md).scores.read_order_edit.value_or(-1.0);
  };
  const double reversed = score({3, 2, 1, 0}, "\n\n");
  const double swapped = score({0, 2, 1, 3}, "\n\n");
  const double monotone = score({0, 1, 2, 3}, "\n\nfiller text in between\n\n");
  if (reversed != 1.0) r.fail("reversed " + fmt(reversed));
  if (swapped != 0.5) r.fail("adjacent swap " + fmt(swapped));
  if (monotone != 0.0) r.fail("co-monotone " + fmt(monotone));
  const std::vector<std::string> ids{"1", "2", "3", "4"};
  if (order_distance(ids, {"4", "3", "2", "1"}) != 1.0 || order_distance(ids, {"1", "3", "2", "4"}) != 0.5 ||
      order_distance(ids, ids) != 0.0) {
    r.fail("order_distance examples");
  }
  if (r.pass) r.detail = "reversed 1.0, adjacent swap 0.5, co-monotone 0.0";
  return r;
}

Outcome map_sanity() {
  Outcome r;
  GroundTruthPage p;
  p.page_id = "p";
  Block t{"t", Category::text_block, {0, 0, 100, 50}, "x", {}, {}, {}, 0, {}, {}};
  Block f{"f", Category::figure, {0, 100, 100, 200}, {}, {}, {}, {}, 1, {}, {}};
  p.blocks = {t, f};
  const Dataset ds{{p}};
  const std::vector<Detection> perfect{{"p", Category::text_block, t.bbox, 0.9}, {"p", Category::figure, f.bbox, 0.9}};
  const double full = evaluate_map(ds, perfect).map;
  const double empty = evaluate_map(ds, {}).map;
  const double half = evaluate_map(ds, {perfect[0]}).map;
  std::vector<Detection> dup = perfect;
  dup.push_back(perfect[0]);
  const double base_ap = average_precision(ds, perfect, Category::text_block, 0.5);
  const double dup_ap = average_precision(ds, dup, Category::text_block, 0.5);
  if (full != 1.0) r.fail("perfect " + fmt(full));
  if (empty != 0.0) r.fail("empty " + fmt(empty));
  if (half != 0.5) r.fail("one of two " + fmt(half));
  if (!(dup_ap < base_ap)) r.fail("duplicate " + fmt(dup_ap) + " vs " + fmt(base_ap));
  if (r.pass) r.detail = "perfect 1.0, empty 0.0, one of two 0.5, duplicate " + fmt(base_ap) + " -> " + fmt(dup_ap);
  return r;
}

Outcome aggregation(const Dataset& ds) {
  Outcome r;
  const CorpusResult res =
      evaluate_end2end(ds, PredictionSource::open(kFixtures + "/pred_noisy.jsonl"), EvalOptions{}, 4);
  double worst = 0.0;
  for (const char* metric : {"text_edit", "formula_edit", "table_teds", "read_order_edit"}) {
    for (const char* attr : {"pdf_type", "layout_type", "language"}) {
      const Selector sel = parse_selector(std::string(attr) + ":" + metric);
      const GroupTable t = aggregate(res.pages, sel);
      double weighted = 0.0;
      std::size_t n = 0;
      for (const auto& g : t.groups) {
        weighted += g.mean * static_cast<double>(g.count);
        n += g.count;
      }
      double sum = 0.0;
      std::size_t m = 0;
      for (const auto& page : res.pages) {
        std::optional<double> v;
        if (std::string(metric) == "text_edit") v = page.text_edit;
        if (std::string(metric) == "formula_edit") v = page.formula_edit;
        if (std::string(metric) == "table_teds") v = page.table_teds;
        if (std::string(metric) == "read_order_edit") v = page.read_order_edit;
        if (v) {
          sum += *v;
          ++m;
        }
      }
      if (n != m || m == 0) {
        r.fail(std::string(attr) + ":" + metric + " covers " + std::to_string(n) + " of " + std::to_string(m));
        continue;
      }
      worst = std::max(worst, std::abs(weighted / static_cast<double>(n) - sum / static_cast<double>(m)));
    }
  }
  if (worst > 1e-9) r.fail("recombination off by " + fmt(worst));
  const EvalReport rep = build_report("end2end", res.pages, {parse_selector("special_issues")}, OverallMode::component_mean);
  const std::string md = render(rep, Format::md);
  if (md.find("## Group: special_issues:text_edit") == std::string::npos || md.find("| none |") == std::string::npos ||
      md.find("| variance |") == std::string::npos) {
    r.fail("special-issue table missing");
  }
  if (r.pass) r.detail = "max recombination error " + fmt(worst) + "; special-issue mean/variance table produced";
  return r;
}

Outcome statistics(const Dataset& ds) {
  Outcome r;
  std::ifstream in(kFixtures + "/gt_manifest.json");
  const nlohmann::json manifest = nlohmann::json::parse(in);
  const StatsReport s = dataset_stats(ds);
  if (s.pages != manifest["pages"].get<std::size_t>() || s.blocks != manifest["blocks"].get<std::size_t>() ||
      s.spans != manifest["spans"].get<std::size_t>()) {
    r.fail("fixture totals differ from manifest");
  }
  for (const auto& [name, rows] : manifest["tables"].items()) {
    const CountTable& t = s.table(name);
    std::size_t total = 0;
    for (const auto& [key, count] : rows.items()) {
      total += count.get<std::size_t>();
      if (t.at(key) != count.get<std::size_t>()) r.fail(name + "/" + key + " differs from manifest");
    }
    if (t.total() != total) r.fail(name + " has extra keys");
  }
  std::string detail = "fixture counts match manifest";
  if (const char* published = std::getenv("OMNIDOCBENCH_JSON")) {
    try {
      std::ifstream f(published);
      const nlohmann::json doc = nlohmann::json::parse(f);
      const Dataset full = looks_like_native_format(doc) ? import_native_dataset(doc) : parse_dataset(doc);
      const StatsReport fs = dataset_stats(full);
      std::size_t types = 0;
      for (const auto& [k, v] : fs.table("pdf_type").rows) types += v > 0;
      const std::size_t text = fs.table("block_category").at("text_block");
      const std::size_t tables = fs.table("block_category").at("table");
      detail += "; published file: " + std::to_string(fs.pages) + " pages, " + std::to_string(types) + " pdf types, " +
                std::to_string(text) + " text blocks, " + std::to_string(tables) + " tables";
      if (fs.pages != 981 || types != 9 || text != 15979 || tables != 428) r.fail(detail);
    } catch (const std::exception& e) {
      r.fail(std::string("published file: ") + e.what());
    }
  } else {
    detail += "; published annotation file not provided (set OMNIDOCBENCH_JSON to check it)";
  }
  if (r.pass) r.detail = detail;
  return r;
}

std::size_t longest_run(const std::string& s) {
  const std::u32string u = utf8_to_u32(s);
  std::size_t best = 0;
  for (std::size_t i = 0; i < u.size();) {
    std::size_t j = i;
    while (j < u.size() && u[j] == u[i]) ++j;
    best = std::max(best, j - i);
    i = j;
  }
  return best;
}

Outcome robustness(const Dataset& ds) {
  Outcome r;
  std::mt19937 rng(9009);
  const std::vector<std::string> pieces = {"$$", "$", "\\[", "\\]", "```", "```math\n", "~~~", "|", "|---|", "\n",
                                           "\n\n", "<table>", "</table>", "<tr>", "<td>", "</td>", "<td colspan=", "x",
                                           "中", "\\begin{tabular}{", "\\end{tabular}", "\\multicolumn{", "&", "\\\\",
                                           "# ", "![", "](", "<img", "\xff", "\xe4\xb8", "}", "{"};
  std::vector<std::string> inputs;
  inputs.push_back(std::string(10u << 20, 'a'));
  inputs.push_back(std::string(10u << 20, '-') + "\n\n|a|b|\n|-|-|\n|1|2|");
  std::string cjk;
  for (int i = 0; i < 3'500'000; ++i) cjk += "中";
  inputs.push_back(cjk);
  inputs.push_back("$$" + std::string(1u << 20, '{'));
  inputs.push_back(std::string(200000, '|') + "\n" + std::string(200000, '-'));
  while (inputs.size() < 100) {
    std::string md;
    const int n = 1 + static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) md += pieces[rng() % pieces.size()];
    inputs.push_back(md);
  }
  const GroundTruthPage& page = ds.pages.front();
  std::size_t completed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    try {
      evaluate_page(page, inputs[i]);
      ++completed;
    } catch (const std::exception& e) {
      r.fail("input " + std::to_string(i) + " threw: " + e.what());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::size_t run_a = longest_run(preprocess(inputs[0]));
  const std::size_t run_cjk = longest_run(preprocess(inputs[2]));
  if (run_a != kDefaultRepeatCap || run_cjk != kDefaultRepeatCap) {
    r.fail("cap not applied: longest runs " + std::to_string(run_a) + ", " + std::to_string(run_cjk));
  }
  if (r.pass) {
    r.detail = std::to_string(completed) + "/100 inputs completed in " + fmt(secs) + " s; 10 MB runs capped to " +
               std::to_string(run_a) + " code points";
  }
  return r;
}

Outcome determinism() {
  Outcome r;
  const std::string gt = kFixtures + "/gt_fixtures.json";
  for (const char* f : {"md", "csv", "json"}) {
    std::string one, eight;
    const int c1 = cli({"--task", "end2end", "--gt", gt, "--pred", kFixtures + "/pred_noisy.jsonl", "--format", f,
                        "--jobs", "1"},
                       one);
    const int c8 = cli({"--task", "end2end", "--gt", gt, "--pred", kFixtures + "/pred_noisy.jsonl", "--format", f,
                        "--jobs", "8"},
                       eight);
    if (c1 != 0 || c8 != 0) r.fail(std::string("exit codes for ") + f);
    if (one != eight || one.empty()) r.fail(std::string("reports differ for ") + f);
  }
  if (r.pass) r.detail = "md, csv and json byte-identical for --jobs 1 and --jobs 8";
  return r;
}

}  // namespace

int main() {
  const Dataset ds = load_dataset(kFixtures + "/gt_fixtures.json");
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"identity end-to-end", [&] { return identity(ds); }},
      {"edit-distance oracle", edit_oracle},
      {"TEDS oracle", [&] { return teds_oracle(ds); }},
      {"matching oracle", matching_oracle},
      {"reading order", reading_order},
      {"mAP sanity", map_sanity},
      {"aggregation", [&] { return aggregation(ds); }},
      {"statistics", [&] { return statistics(ds); }},
      {"robustness", [&] { return robustness(ds); }},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome o;
    try {
      o = checks[i].second();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << checks[i].first << "): " << o.detail
              << "\n";
  }
  return failures == 0 ? 0 : 1;
}
