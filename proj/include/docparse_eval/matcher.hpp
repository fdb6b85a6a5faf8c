#pragma once

// Alignment of ground-truth units with predicted elements.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "docparse_eval/annotation.hpp"

namespace docparse_eval {

struct MatchConfig {
  double similarity_threshold = 0.7;
  double fuzzy_containment_ratio = 0.9;
};

// Throws InputError when either value lies outside (0, 1].
void check_config(const MatchConfig& config);

struct MatchUnit {
  std::string id;
  std::string text;
  // Index into the originating element list (prediction side) or the block
  // list (ground-truth side).
  std::size_t source = 0;
};

// Groups hold positions into the unit lists handed to the matcher; positions
// inside a group are consecutive and ascending.
struct MatchPair {
  std::vector<std::size_t> gt;
  std::vector<std::size_t> pred;
  double distance = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // ordered by first GT position
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

struct ScoredPair : MatchPair {
  bool scored = true;
};

struct FilteredMatch {
  std::vector<MatchUnit> gt_units;
  std::vector<MatchUnit> pred_units;
  std::vector<bool> gt_ignored;  // parallel to gt_units
  std::vector<ScoredPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

// Text of a group: member texts joined by single spaces.
std::string join_group(const std::vector<MatchUnit>& units, const std::vector<std::size_t>& group);

std::vector<std::vector<double>> distance_matrix(const std::vector<std::string>& gt_texts,
                                                 const std::vector<std::string>& pred_texts);

// Share of the shorter string that appears, in order, inside the longer one
// (longest common subsequence over code points). 1 when the shorter is empty.
double fuzzy_containment(const std::string& a, const std::string& b);

MatchResult adjacency_search_match(const std::vector<MatchUnit>& gt_units, const std::vector<MatchUnit>& pred_units,
                                   const MatchConfig& config = {});

// Total alignment cost: pair distances plus 1 per unmatched unit on either side.
double match_cost(const MatchResult& match);

// Tables are paired one to one by ascending distance with no threshold.
MatchResult one_to_one_match(const std::vector<std::vector<double>>& distances);

// Marks pairs whose GT group is entirely made of ignored categories as
// unscored, drops ignored GT units from the unmatched list, and drops
// unmatched predictions that clear the similarity threshold against an
// ignored GT unit.
FilteredMatch apply_ignore_rules(const GroundTruthPage& page, std::vector<MatchUnit> gt_units,
                                 std::vector<MatchUnit> pred_units, const MatchResult& match,
                                 const std::set<Category>& ignore, const MatchConfig& config = {});

}  // namespace docparse_eval
