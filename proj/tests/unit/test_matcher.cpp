#include <gtest/gtest.h>

#include <random>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/matcher.hpp"
#include "docparse_eval/metrics.hpp"
#include "oracles.hpp"

using namespace docparse_eval;

namespace {

std::vector<MatchUnit> units(const std::vector<std::string>& texts, const std::string& prefix) {
  std::vector<MatchUnit> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({prefix + std::to_string(i), texts[i], i});
  return out;
}

GroundTruthPage page_with(const std::vector<std::pair<std::string, Category>>& blocks) {
  GroundTruthPage p;
  p.page_id = "p";
  int order = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Block b;
    b.id = "b" + std::to_string(i);
    b.category = blocks[i].second;
    b.content = blocks[i].first;
    if (carries_order(b.category)) b.order = order++;
    p.blocks.push_back(b);
  }
  return p;
}

}  // namespace

TEST(Matcher, IdentityMatchesOneToOne) {
  const std::vector<std::string> t{"first paragraph here", "second one", "third and last"};
  const MatchResult r = adjacency_search_match(units(t, "g"), units(t, "p"));
  ASSERT_EQ(r.pairs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.pairs[i].gt, std::vector<std::size_t>{i});
    EXPECT_EQ(r.pairs[i].pred, std::vector<std::size_t>{i});
    EXPECT_EQ(r.pairs[i].distance, 0.0);
  }
  EXPECT_EQ(match_cost(r), 0.0);
}

TEST(Matcher, SplitPredictionIsMerged) {
  const MatchResult r = adjacency_search_match(units({"The quick brown fox jumps over the lazy dog"}, "g"),
                                               units({"The quick brown fox", "jumps over the lazy dog"}, "p"));
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].pred, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.pairs[0].distance, 0.0);
  EXPECT_TRUE(r.unmatched_pred.empty());
}

TEST(Matcher, SplitGroundTruthIsMerged) {
  const MatchResult r = adjacency_search_match(units({"alpha beta gamma", "delta epsilon zeta"}, "g"),
                                               units({"alpha beta gamma delta epsilon zeta"}, "p"));
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].gt, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.pairs[0].distance, 0.0);
}

TEST(Matcher, DissimilarUnitsStayUnmatched) {
  const MatchResult r = adjacency_search_match(units({"alpha"}, "g"), units({"zzzzzzzz"}, "p"));
  EXPECT_TRUE(r.pairs.empty());
  EXPECT_EQ(r.unmatched_gt, std::vector<std::size_t>{0});
  EXPECT_EQ(r.unmatched_pred, std::vector<std::size_t>{0});
  EXPECT_EQ(match_cost(r), 2.0);
}

TEST(Matcher, EmptySides) {
  EXPECT_EQ(match_cost(adjacency_search_match({}, {})), 0.0);
  EXPECT_EQ(match_cost(adjacency_search_match(units({"a", "b"}, "g"), {})), 2.0);
}

TEST(Matcher, RejectsBadConfig) {
  EXPECT_THROW(check_config({0.0, 0.9}), InputError);
  EXPECT_THROW(check_config({0.7, 1.5}), InputError);
  EXPECT_NO_THROW(check_config({1.0, 1.0}));
}

TEST(Matcher, FuzzyContainment) {
  EXPECT_EQ(fuzzy_containment("abc", "xxabcxx"), 1.0);
  EXPECT_EQ(fuzzy_containment("", "abc"), 1.0);
  EXPECT_DOUBLE_EQ(fuzzy_containment("abcd", "abxd"), 0.75);
}

TEST(Matcher, DistanceMatrix) {
  const auto m = distance_matrix({"abc"}, {"abd", "abc"});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_DOUBLE_EQ(m[0][0], 1.0 / 3.0);
  EXPECT_EQ(m[0][1], 0.0);
  EXPECT_TRUE(distance_matrix({}, {"x"}).empty());
}

TEST(Matcher, OneToOneByAscendingDistance) {
  const MatchResult r = one_to_one_match({{0.5, 0.1}, {0.2, 0.9}});
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_EQ(r.pairs[0].pred, std::vector<std::size_t>{1});
  EXPECT_EQ(r.pairs[1].pred, std::vector<std::size_t>{0});
  const MatchResult extra = one_to_one_match({{0.3, 0.4, 0.9}});
  EXPECT_EQ(extra.unmatched_pred, (std::vector<std::size_t>{1, 2}));
}

TEST(Matcher, IgnoredHeaderIsMatchedButUnscored) {
  const GroundTruthPage page = page_with({{"Chapter One", Category::header}, {"Body text of the page", Category::text_block}});
  std::vector<MatchUnit> gt{{"b0", "Chapter One", 0}, {"b1", "Body text of the page", 1}};
  std::vector<MatchUnit> pred{{"e0", "Chapter One", 0}, {"e1", "Body text of the page", 1}};
  const MatchResult r = adjacency_search_match(gt, pred);
  const FilteredMatch f = apply_ignore_rules(page, gt, pred, r, default_ignore_categories());
  ASSERT_EQ(f.pairs.size(), 2u);
  EXPECT_FALSE(f.pairs[0].scored);
  EXPECT_TRUE(f.pairs[1].scored);
}

TEST(Matcher, IgnoredFooterDropsSimilarPrediction) {
  const GroundTruthPage page = page_with({{"Body text of the page", Category::text_block}, {"Page footer text", Category::footer}});
  std::vector<MatchUnit> gt{{"b0", "Body text of the page", 0}, {"b1", "Page footer text", 1}};
  std::vector<MatchUnit> pred{{"e0", "Body text of the page", 0}, {"e1", "Page footer text!", 1}};
  MatchResult r;
  r.pairs.push_back({{0}, {0}, 0.0});
  r.unmatched_gt = {1};
  r.unmatched_pred = {1};
  const FilteredMatch f = apply_ignore_rules(page, gt, pred, r, default_ignore_categories());
  EXPECT_TRUE(f.unmatched_gt.empty());
  EXPECT_TRUE(f.unmatched_pred.empty());
}

TEST(Matcher, OracleSelfCheck) {
  EXPECT_EQ(oracle::optimal_cost({"a b", "c"}, {"a", "b c"}), 0.0);
  EXPECT_EQ(oracle::optimal_cost({"abc"}, {}), 1.0);
  EXPECT_DOUBLE_EQ(oracle::optimal_cost({"abc"}, {"abd"}), 1.0 / 3.0);
}

TEST(Matcher, ExactOnUnperturbedSplits) {
  std::mt19937 rng(31);
  int cases = 0;
  for (int round = 0; round < 600; ++round) {
    const auto c = oracle::synthetic_case(rng, 0);
    if (c.gt.size() > 6 || c.pred.size() > 6) continue;
    ++cases;
    const double opt = oracle::optimal_cost(c.gt, c.pred);
    const double got = match_cost(adjacency_search_match(units(c.gt, "g"), units(c.pred, "p")));
    ASSERT_LE(got, opt + 1e-12) << oracle::describe(c);
  }
  EXPECT_GT(cases, 300);
}

TEST(Matcher, NearOptimalOnSmallPerturbations) {
  std::mt19937 rng(37);
  int cases = 0;
  for (int round = 0; round < 600; ++round) {
    const auto c = oracle::synthetic_case(rng, 2);
    if (c.gt.size() > 6 || c.pred.size() > 6) continue;
    ++cases;
    const double opt = oracle::optimal_cost(c.gt, c.pred);
    const double got = match_cost(adjacency_search_match(units(c.gt, "g"), units(c.pred, "p")));
    ASSERT_LE(got, opt * 1.10 + 1e-12) << oracle::describe(c) << " opt=" << opt << " got=" << got;
  }
  EXPECT_GT(cases, 300);
}
