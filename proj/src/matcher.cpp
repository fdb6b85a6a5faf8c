#include "docparse_eval/matcher.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_map>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/metrics.hpp"
#include "docparse_eval/unicode.hpp"

namespace docparse_eval {

namespace {

constexpr double kEps = 1e-12;
// Refinement: anchor pairs must be this close; gaps larger than kMaxWindow
// units on a side, or needing more than kWindowBudget fresh distance
// evaluations, keep the greedy result.
constexpr double kAnchorDistance = 0.1;
constexpr std::size_t kMaxWindow = 16;
constexpr std::size_t kMaxGroup = 6;
constexpr std::size_t kWindowBudget = 1000;

// Bit-parallel LCS length (Allison-Dix / Hyyrö), pattern = `a`.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = a.size();
  if (m == 0 || b.empty()) return 0;
  std::unordered_map<char32_t, std::size_t> alphabet;
  for (char32_t c : a) alphabet.emplace(c, alphabet.size());
  const std::size_t words = (m + 63) / 64;
  std::vector<std::uint64_t> peq(alphabet.size() * words, 0);
  for (std::size_t i = 0; i < m; ++i) peq[alphabet[a[i]] * words + i / 64] |= std::uint64_t{1} << (i % 64);
  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (char32_t c : b) {
    const auto it = alphabet.find(c);
    if (it == alphabet.end()) continue;
    const std::uint64_t* eq = &peq[it->second * words];
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & eq[w];
      const std::uint64_t s1 = v[w] + u;
      const std::uint64_t c1 = s1 < v[w] ? 1 : 0;
      const std::uint64_t s2 = s1 + carry;
      const std::uint64_t c2 = s2 < s1 ? 1 : 0;
      carry = c1 | c2;
      v[w] = s2 | (v[w] - u);
    }
  }
  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t x = ~v[w];
    if (w + 1 == words && m % 64 != 0) x &= (std::uint64_t{1} << (m % 64)) - 1;
    zeros += static_cast<std::size_t>(std::popcount(x));
  }
  return zeros;
}

double containment_u32(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return 1.0;
  return static_cast<double>(lcs_length(a, b)) / static_cast<double>(a.size());
}

struct Group {
  std::size_t gb, ge, pb, pe;
  double d;
};

class Aligner {
 public:
  Aligner(const std::vector<MatchUnit>& gt, const std::vector<MatchUnit>& pred) {
    for (const auto& u : gt) gt_.push_back(utf8_to_u32(u.text));
    for (const auto& u : pred) pred_.push_back(utf8_to_u32(u.text));
    gt_owner_.assign(gt_.size(), -1);
    pred_owner_.assign(pred_.size(), -1);
  }

  double dist(std::size_t gb, std::size_t ge, std::size_t pb, std::size_t pe) {
    const auto key = std::make_tuple(gb, ge, pb, pe);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const double d = normalized_edit_distance(join(gt_, gb, ge), join(pred_, pb, pe));
    memo_.emplace(key, d);
    return d;
  }

  void stage_one(double threshold) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
    for (std::size_t i = 0; i < gt_.size(); ++i) {
      for (std::size_t j = 0; j < pred_.size(); ++j) {
        const double d = dist(i, i + 1, j, j + 1);
        if (1.0 - d >= threshold - kEps) cands.emplace_back(d, i, j);
      }
    }
    assign(cands);
  }

  void seed(double ratio) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
    for (std::size_t i = 0; i < gt_.size(); ++i) {
      if (gt_owner_[i] >= 0) continue;
      for (std::size_t j = 0; j < pred_.size(); ++j) {
        if (pred_owner_[j] >= 0) continue;
        if (containment_u32(gt_[i], pred_[j]) >= ratio - kEps) cands.emplace_back(dist(i, i + 1, j, j + 1), i, j);
      }
    }
    assign(cands);
  }

  void merge() {
    while (step()) {
    }
  }

  // Staggered cuts can leave the greedy merges stuck behind a seeded unit.
  // Strong one-to-one pairs in monotone order act as anchors; each gap
  // between anchors is re-solved exactly when small enough, and the result
  // replaces the greedy groups there only if it is cheaper.
  void refine(double threshold, double ratio) {
    std::vector<std::size_t> strong;
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      const Group& g = groups_[k];
      if (g.ge - g.gb == 1 && g.pe - g.pb == 1 && g.d <= kAnchorDistance) strong.push_back(k);
    }
    std::sort(strong.begin(), strong.end(), [&](std::size_t a, std::size_t b) { return groups_[a].gb < groups_[b].gb; });
    std::vector<Group> anchors;
    for (std::size_t k : longest_increasing_pred(strong)) anchors.push_back(groups_[k]);

    std::size_t gb = 0;
    std::size_t pb = 0;
    for (std::size_t a = 0; a <= anchors.size(); ++a) {
      const std::size_t ge = a < anchors.size() ? anchors[a].gb : gt_.size();
      const std::size_t pe = a < anchors.size() ? anchors[a].pb : pred_.size();
      if (ge > gb && pe > pb && ge - gb <= kMaxWindow && pe - pb <= kMaxWindow) solve_window(gb, ge, pb, pe, threshold, ratio);
      if (a < anchors.size()) {
        gb = anchors[a].ge;
        pb = anchors[a].pe;
      }
    }
    // An exact repeat can anchor at the wrong place; small pages also get
    // one pass over everything.
    if (!anchors.empty() && gt_.size() <= kMaxWindow && pred_.size() <= kMaxWindow) {
      solve_window(0, gt_.size(), 0, pred_.size(), threshold, ratio);
    }
  }

  MatchResult result() const {
    MatchResult r;
    std::vector<Group> sorted = groups_;
    std::sort(sorted.begin(), sorted.end(), [](const Group& a, const Group& b) { return a.gb < b.gb; });
    for (const Group& g : sorted) {
      MatchPair p;
      for (std::size_t i = g.gb; i < g.ge; ++i) p.gt.push_back(i);
      for (std::size_t j = g.pb; j < g.pe; ++j) p.pred.push_back(j);
      p.distance = g.d;
      r.pairs.push_back(std::move(p));
    }
    for (std::size_t i = 0; i < gt_.size(); ++i) {
      if (gt_owner_[i] < 0) r.unmatched_gt.push_back(i);
    }
    for (std::size_t j = 0; j < pred_.size(); ++j) {
      if (pred_owner_[j] < 0) r.unmatched_pred.push_back(j);
    }
    return r;
  }

 private:
  static std::u32string join(const std::vector<std::u32string>& v, std::size_t b, std::size_t e) {
    std::u32string out;
    for (std::size_t k = b; k < e; ++k) {
      if (k > b) out.push_back(U' ');
      out += v[k];
    }
    return out;
  }

  void assign(std::vector<std::tuple<double, std::size_t, std::size_t>>& cands) {
    std::sort(cands.begin(), cands.end());
    for (const auto& [d, i, j] : cands) {
      if (gt_owner_[i] >= 0 || pred_owner_[j] >= 0) continue;
      groups_.push_back({i, i + 1, j, j + 1, d});
      gt_owner_[i] = pred_owner_[j] = static_cast<int>(groups_.size() - 1);
    }
  }

  bool gt_free(std::size_t i) const { return i < gt_.size() && gt_owner_[i] < 0; }
  bool pred_free(std::size_t j) const { return j < pred_.size() && pred_owner_[j] < 0; }

  struct Move {
    double gain = 0.0;
    Group result{};
    int absorbed = -1;  // other group merged into this one
  };

  // Applies the best strictly improving move of the first group that has
  // one. Groups are visited by GT position; candidate moves in a fixed order.
  bool step() {
    std::vector<std::size_t> order(groups_.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return groups_[a].gb < groups_[b].gb; });

    for (std::size_t k : order) {
      const Group g = groups_[k];
      std::optional<Move> best;
      auto consider = [&](Group cand, double baseline, int absorbed) {
        cand.d = dist(cand.gb, cand.ge, cand.pb, cand.pe);
        const double gain = baseline - cand.d;
        if (gain <= kEps) return;
        if (!best || gain > best->gain + kEps) best = Move{gain, cand, absorbed};
      };

      const bool gl = g.gb > 0 && gt_free(g.gb - 1);
      const bool gr = gt_free(g.ge);
      const bool pl = g.pb > 0 && pred_free(g.pb - 1);
      const bool pr = pred_free(g.pe);
      if (gl) consider({g.gb - 1, g.ge, g.pb, g.pe, 0}, g.d, -1);
      if (gr) consider({g.gb, g.ge + 1, g.pb, g.pe, 0}, g.d, -1);
      if (pl) consider({g.gb, g.ge, g.pb - 1, g.pe, 0}, g.d, -1);
      if (pr) consider({g.gb, g.ge, g.pb, g.pe + 1, 0}, g.d, -1);
      if (gl && pl) consider({g.gb - 1, g.ge, g.pb - 1, g.pe, 0}, g.d, -1);
      if (gl && pr) consider({g.gb - 1, g.ge, g.pb, g.pe + 1, 0}, g.d, -1);
      if (gr && pl) consider({g.gb, g.ge + 1, g.pb - 1, g.pe, 0}, g.d, -1);
      if (gr && pr) consider({g.gb, g.ge + 1, g.pb, g.pe + 1, 0}, g.d, -1);
      // Neighbouring pair adjacent on both sides.
      if (g.gb > 0 && g.pb > 0 && gt_owner_[g.gb - 1] >= 0 && gt_owner_[g.gb - 1] == pred_owner_[g.pb - 1]) {
        const int h = gt_owner_[g.gb - 1];
        const Group& o = groups_[static_cast<std::size_t>(h)];
        if (o.ge == g.gb && o.pe == g.pb) consider({o.gb, g.ge, o.pb, g.pe, 0}, g.d + o.d, h);
      }
      if (g.ge < gt_.size() && g.pe < pred_.size() && gt_owner_[g.ge] >= 0 && gt_owner_[g.ge] == pred_owner_[g.pe]) {
        const int h = gt_owner_[g.ge];
        const Group& o = groups_[static_cast<std::size_t>(h)];
        if (o.gb == g.ge && o.pb == g.pe) consider({g.gb, o.ge, g.pb, o.pe, 0}, g.d + o.d, h);
      }
      if (!best) continue;
      apply(k, *best);
      return true;
    }
    return false;
  }

  // Indices into `cands` (sorted by GT position) forming the longest chain
  // with strictly increasing prediction positions.
  std::vector<std::size_t> longest_increasing_pred(const std::vector<std::size_t>& cands) const {
    const std::size_t n = cands.size();
    std::vector<std::size_t> len(n, 1);
    std::vector<std::size_t> prev(n, n);
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (groups_[cands[j]].pb < groups_[cands[i]].pb && len[j] + 1 > len[i]) {
          len[i] = len[j] + 1;
          prev[i] = j;
        }
      }
      if (best == n || len[i] > len[best]) best = i;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = best; i < n; i = prev[i]) out.push_back(cands[i]);
    std::reverse(out.begin(), out.end());
    return out;
  }

  void solve_window(std::size_t gb, std::size_t ge, std::size_t pb, std::size_t pe, double threshold, double ratio) {
    auto inside = [&](const Group& g) { return g.gb >= gb && g.ge <= ge && g.pb >= pb && g.pe <= pe; };
    // Units owned by a group reaching outside the window stay as they are.
    std::vector<bool> gt_pinned(ge - gb, false);
    std::vector<bool> pred_pinned(pe - pb, false);
    double current = 0.0;
    double weakest = 0.0;
    for (const Group& g : groups_) {
      if (inside(g)) {
        current += g.d;
        weakest = std::max(weakest, g.d);
        continue;
      }
      for (std::size_t i = std::max(g.gb, gb); i < std::min(g.ge, ge); ++i) gt_pinned[i - gb] = true;
      for (std::size_t j = std::max(g.pb, pb); j < std::min(g.pe, pe); ++j) pred_pinned[j - pb] = true;
    }
    std::size_t free_gt = 0;
    std::size_t free_pred = 0;
    for (std::size_t i = gb; i < ge; ++i) free_gt += gt_owner_[i] < 0 ? 1 : 0;
    for (std::size_t j = pb; j < pe; ++j) free_pred += pred_owner_[j] < 0 ? 1 : 0;
    current += static_cast<double>(free_gt + free_pred);
    // Nothing to gain when the pairs are exact and leftovers sit on one side only.
    if ((free_gt == 0 || free_pred == 0) && weakest <= kEps) return;

    const std::size_t n = ge - gb;
    const std::size_t m = pe - pb;
    // Joined lengths give a lower bound on the distance: |la - lb| / max.
    std::vector<double> gt_len(n + 1, 0.0);
    std::vector<double> pred_len(m + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) gt_len[i + 1] = gt_len[i] + static_cast<double>(gt_[gb + i].size() + 1);
    for (std::size_t j = 0; j < m; ++j) pred_len[j + 1] = pred_len[j] + static_cast<double>(pred_[pb + j].size() + 1);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    struct Step {
      std::size_t a = 0, b = 0;  // next state
      bool pair = false;
    };
    std::size_t spent = 0;
    std::vector<std::vector<double>> f(n + 1, std::vector<double>(m + 1, kInf));
    std::vector<std::vector<Step>> how(n + 1, std::vector<Step>(m + 1));
    for (std::size_t i = n + 1; i-- > 0;) {
      for (std::size_t j = m + 1; j-- > 0;) {
        if (i == n && j == m) {
          f[i][j] = 0.0;
          continue;
        }
        auto offer = [&](double cost, std::size_t a, std::size_t b, bool pair) {
          if (cost < f[i][j] - kEps) {
            f[i][j] = cost;
            how[i][j] = {a, b, pair};
          }
        };
        if (i < n) offer(f[i + 1][j] + (gt_pinned[i] ? 0.0 : 1.0), i + 1, j, false);
        if (j < m) offer(f[i][j + 1] + (pred_pinned[j] ? 0.0 : 1.0), i, j + 1, false);
        if (i == n || j == m || gt_pinned[i] || pred_pinned[j]) continue;
        for (std::size_t a = i + 1; a <= std::min(n, i + kMaxGroup) && !gt_pinned[a - 1]; ++a) {
          for (std::size_t b = j + 1; b <= std::min(m, j + kMaxGroup) && !pred_pinned[b - 1]; ++b) {
            if (f[a][b] >= f[i][j]) continue;
            const double la = gt_len[a] - gt_len[i] - 1.0;
            const double lb = pred_len[b] - pred_len[j] - 1.0;
            if (std::max(la, lb) > 0 && std::abs(la - lb) / std::max(la, lb) + f[a][b] >= f[i][j] - kEps) continue;
            if (!memo_.count(std::make_tuple(gb + i, gb + a, pb + j, pb + b)) && ++spent > kWindowBudget) return;
            const double d = dist(gb + i, gb + a, pb + j, pb + b);
            if (d + f[a][b] >= f[i][j] - kEps) continue;
            if (1.0 - d < threshold - kEps && containment_u32(join(gt_, gb + i, gb + a), join(pred_, pb + j, pb + b)) < ratio - kEps) {
              continue;
            }
            if (!tight(gb + i, gb + a, pb + j, pb + b, d)) continue;
            offer(d + f[a][b], a, b, true);
          }
        }
      }
    }
    if (f[0][0] >= current - 1e-9) return;

    std::vector<Group> kept;
    for (const Group& g : groups_) {
      if (!inside(g)) kept.push_back(g);
    }
    for (std::size_t i = 0, j = 0; i < n || j < m;) {
      const Step s = how[i][j];
      if (s.pair) kept.push_back({gb + i, gb + s.a, pb + j, pb + s.b, dist(gb + i, gb + s.a, pb + j, pb + s.b)});
      i = s.a;
      j = s.b;
    }
    groups_ = std::move(kept);
    reindex();
  }

  // Every end unit of a multi-unit side must pull the distance down;
  // otherwise the group only swallows an unrelated neighbour.
  bool tight(std::size_t gb, std::size_t ge, std::size_t pb, std::size_t pe, double d) {
    if (ge - gb > 1 && (dist(gb + 1, ge, pb, pe) <= d + kEps || dist(gb, ge - 1, pb, pe) <= d + kEps)) return false;
    if (pe - pb > 1 && (dist(gb, ge, pb + 1, pe) <= d + kEps || dist(gb, ge, pb, pe - 1) <= d + kEps)) return false;
    return true;
  }

  void reindex() {
    std::fill(gt_owner_.begin(), gt_owner_.end(), -1);
    std::fill(pred_owner_.begin(), pred_owner_.end(), -1);
    for (std::size_t q = 0; q < groups_.size(); ++q) {
      for (std::size_t i = groups_[q].gb; i < groups_[q].ge; ++i) gt_owner_[i] = static_cast<int>(q);
      for (std::size_t j = groups_[q].pb; j < groups_[q].pe; ++j) pred_owner_[j] = static_cast<int>(q);
    }
  }

  void apply(std::size_t k, const Move& mv) {
    if (mv.absorbed >= 0) {
      // Remove the absorbed group, keeping indices consistent.
      const std::size_t h = static_cast<std::size_t>(mv.absorbed);
      groups_[k] = mv.result;
      groups_.erase(groups_.begin() + static_cast<long>(h));
    } else {
      groups_[k] = mv.result;
    }
    reindex();
  }

  std::vector<std::u32string> gt_;
  std::vector<std::u32string> pred_;
  std::vector<int> gt_owner_;
  std::vector<int> pred_owner_;
  std::vector<Group> groups_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>, double> memo_;
};

}  // namespace

void check_config(const MatchConfig& config) {
  auto ok = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!ok(config.similarity_threshold)) throw InputError("match threshold must lie in (0, 1]");
  if (!ok(config.fuzzy_containment_ratio)) throw InputError("containment ratio must lie in (0, 1]");
}

std::string join_group(const std::vector<MatchUnit>& units, const std::vector<std::size_t>& group) {
  std::string out;
  for (std::size_t k = 0; k < group.size(); ++k) {
    if (k > 0) out.push_back(' ');
    out += units[group[k]].text;
  }
  return out;
}

std::vector<std::vector<double>> distance_matrix(const std::vector<std::string>& gt_texts,
                                                 const std::vector<std::string>& pred_texts) {
  std::vector<std::u32string> pred;
  for (const auto& p : pred_texts) pred.push_back(utf8_to_u32(p));
  std::vector<std::vector<double>> out;
  out.reserve(gt_texts.size());
  for (const auto& g : gt_texts) {
    const std::u32string gu = utf8_to_u32(g);
    std::vector<double> row;
    row.reserve(pred.size());
    for (const auto& p : pred) row.push_back(normalized_edit_distance(gu, p));
    out.push_back(std::move(row));
  }
  return out;
}

double fuzzy_containment(const std::string& a, const std::string& b) {
  return containment_u32(utf8_to_u32(a), utf8_to_u32(b));
}

MatchResult adjacency_search_match(const std::vector<MatchUnit>& gt_units, const std::vector<MatchUnit>& pred_units,
                                   const MatchConfig& config) {
  Aligner a(gt_units, pred_units);
  a.stage_one(config.similarity_threshold);
  a.seed(config.fuzzy_containment_ratio);
  a.merge();
  a.refine(config.similarity_threshold, config.fuzzy_containment_ratio);
  a.merge();
  return a.result();
}

double match_cost(const MatchResult& match) {
  double cost = static_cast<double>(match.unmatched_gt.size() + match.unmatched_pred.size());
  for (const auto& p : match.pairs) cost += p.distance;
  return cost;
}

MatchResult one_to_one_match(const std::vector<std::vector<double>>& distances) {
  const std::size_t n = distances.size();
  const std::size_t m = n == 0 ? 0 : distances.front().size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> cands;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cands.emplace_back(distances[i][j], i, j);
  }
  std::sort(cands.begin(), cands.end());
  std::vector<bool> gt_used(n, false);
  std::vector<bool> pred_used(m, false);
  MatchResult r;
  for (const auto& [d, i, j] : cands) {
    if (gt_used[i] || pred_used[j]) continue;
    gt_used[i] = pred_used[j] = true;
    r.pairs.push_back({{i}, {j}, d});
  }
  std::sort(r.pairs.begin(), r.pairs.end(), [](const MatchPair& a, const MatchPair& b) { return a.gt < b.gt; });
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt_used[i]) r.unmatched_gt.push_back(i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!pred_used[j]) r.unmatched_pred.push_back(j);
  }
  return r;
}

FilteredMatch apply_ignore_rules(const GroundTruthPage& page, std::vector<MatchUnit> gt_units,
                                 std::vector<MatchUnit> pred_units, const MatchResult& match,
                                 const std::set<Category>& ignore, const MatchConfig& config) {
  FilteredMatch out;
  out.gt_ignored.resize(gt_units.size(), false);
  for (std::size_t k = 0; k < gt_units.size(); ++k) {
    const Block* b = page.find_block(gt_units[k].id);
    out.gt_ignored[k] = b && (ignore.count(b->category) > 0 || is_masked(b->category));
  }
  for (const auto& p : match.pairs) {
    ScoredPair sp;
    static_cast<MatchPair&>(sp) = p;
    sp.scored = !std::all_of(p.gt.begin(), p.gt.end(), [&](std::size_t g) { return out.gt_ignored[g]; });
    out.pairs.push_back(std::move(sp));
  }
  for (std::size_t g : match.unmatched_gt) {
    if (!out.gt_ignored[g]) out.unmatched_gt.push_back(g);
  }
  for (std::size_t p : match.unmatched_pred) {
    bool excused = false;
    for (std::size_t g = 0; g < gt_units.size() && !excused; ++g) {
      if (!out.gt_ignored[g]) continue;
      excused = 1.0 - normalized_edit_distance(gt_units[g].text, pred_units[p].text) >=
                config.similarity_threshold - kEps;
    }
    if (!excused) out.unmatched_pred.push_back(p);
  }
  out.gt_units = std::move(gt_units);
  out.pred_units = std::move(pred_units);
  return out;
}

}  // namespace docparse_eval
