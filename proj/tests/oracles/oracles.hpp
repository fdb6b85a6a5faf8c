#pragma once

// Slow reference implementations used by the unit and acceptance tests.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "docparse_eval/metrics.hpp"
#include "docparse_eval/unicode.hpp"

namespace oracle {

// Memoized recursive edit distance.
inline std::size_t recursive_distance(const std::u32string& a, const std::u32string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::min(go(i + 1, j) + 1, go(i, j + 1) + 1);
    best = std::min(best, go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1));
    return memo[key] = best;
  };
  return go(0, 0);
}

inline double recursive_ned(const std::u32string& a, const std::u32string& b) {
  if (a.empty() && b.empty()) return 0.0;
  return static_cast<double>(recursive_distance(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

// Plain quadratic table, for strings too long for the recursive version.
inline double table_ned(const std::string& x, const std::string& y) {
  const std::u32string a = docparse_eval::utf8_to_u32(x);
  const std::u32string b = docparse_eval::utf8_to_u32(y);
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) t[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) t[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = std::min({t[i - 1][j] + 1, t[i][j - 1] + 1, t[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return static_cast<double>(t[a.size()][b.size()]) / static_cast<double>(std::max(a.size(), b.size()));
}

inline std::u32string random_string(std::mt19937& rng, std::size_t max_len) {
  static const std::u32string alphabet = U"abcxyz é中文";
  std::u32string s(rng() % (max_len + 1), U' ');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

// Exhaustive ordered-forest edit distance (rightmost-root recursion) with
// the table cost model, memoized on the pair of forests.
class ForestDistance {
 public:
  ForestDistance(const docparse_eval::TableTree& a, const docparse_eval::TableTree& b) : a_(a), b_(b) {}

  double distance() { return go({0}, {0}); }

 private:
  using Forest = std::vector<std::size_t>;

  static double sub(const docparse_eval::TableNode& x, const docparse_eval::TableNode& y) {
    if (x.label != y.label || x.colspan != y.colspan || x.rowspan != y.rowspan) return 1.0;
    if (x.label != "td") return 0.0;
    return recursive_ned(x.text, y.text);
  }

  static std::size_t count(const docparse_eval::TableTree& t, const Forest& f) {
    std::size_t n = 0;
    for (std::size_t v : f) n += 1 + count(t, t.nodes[v].children);
    return n;
  }

  static Forest drop_root(const docparse_eval::TableTree& t, const Forest& f) {
    Forest out(f.begin(), f.end() - 1);
    for (std::size_t c : t.nodes[f.back()].children) out.push_back(c);
    return out;
  }

  double go(const Forest& f, const Forest& g) {
    if (f.empty()) return static_cast<double>(count(b_, g));
    if (g.empty()) return static_cast<double>(count(a_, f));
    const auto key = std::make_pair(f, g);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const std::size_t v = f.back();
    const std::size_t w = g.back();
    double best = go(drop_root(a_, f), g) + 1.0;
    best = std::min(best, go(f, drop_root(b_, g)) + 1.0);
    const Forest f_rest(f.begin(), f.end() - 1);
    const Forest g_rest(g.begin(), g.end() - 1);
    best = std::min(best, go(f_rest, g_rest) + go(a_.nodes[v].children, b_.nodes[w].children) +
                              sub(a_.nodes[v], b_.nodes[w]));
    return memo_[key] = best;
  }

  const docparse_eval::TableTree& a_;
  const docparse_eval::TableTree& b_;
  std::map<std::pair<Forest, Forest>, double> memo_;
};

inline double forest_teds(const docparse_eval::TableTree& a, const docparse_eval::TableTree& b) {
  const double ted = ForestDistance(a, b).distance();
  return std::clamp(1.0 - ted / static_cast<double>(std::max(a.size(), b.size())), 0.0, 1.0);
}

// Random table-shaped tree: root "table", cells are leaves.
inline docparse_eval::TableTree random_tree(std::mt19937& rng, std::size_t max_nodes) {
  struct Proto {
    std::string label;
    std::u32string text;
    int colspan = 1;
    std::vector<int> kids;
  };
  static const std::vector<std::string> labels = {"thead", "tbody", "tr", "td", "td", "td"};
  static const std::vector<std::u32string> texts = {U"", U"a", U"ab", U"b", U"ba", U"abc"};
  std::vector<Proto> protos{{"table", U"", 1, {}}};
  const std::size_t n = 1 + rng() % max_nodes;
  while (protos.size() < n) {
    std::vector<int> parents;
    for (std::size_t i = 0; i < protos.size(); ++i) {
      if (protos[i].label != "td") parents.push_back(static_cast<int>(i));
    }
    const int parent = parents[rng() % parents.size()];
    Proto p{labels[rng() % labels.size()], U"", 1, {}};
    if (p.label == "td") {
      p.text = texts[rng() % texts.size()];
      if (rng() % 5 == 0) p.colspan = 2;
    }
    protos.push_back(p);
    protos[static_cast<std::size_t>(parent)].kids.push_back(static_cast<int>(protos.size() - 1));
  }
  docparse_eval::TableTree t;
  std::function<std::size_t(int)> emit = [&](int id) -> std::size_t {
    const std::size_t at = t.nodes.size();
    const Proto& p = protos[static_cast<std::size_t>(id)];
    t.nodes.push_back(docparse_eval::TableNode{p.label, p.text, p.colspan, 1, {}});
    for (int k : p.kids) {
      const std::size_t child = emit(k);
      t.nodes[at].children.push_back(child);
    }
    return at;
  };
  emit(0);
  return t;
}

// Best monotone alignment of contiguous groups: a group pair costs the
// normalized edit distance of the space-joined texts, a leftover unit 1.
inline double optimal_cost(const std::vector<std::string>& gt, const std::vector<std::string>& pred) {
  const std::size_t n = gt.size();
  const std::size_t m = pred.size();
  auto join = [](const std::vector<std::string>& v, std::size_t b, std::size_t e) {
    std::string s;
    for (std::size_t k = b; k < e; ++k) s += (k > b ? " " : "") + v[k];
    return s;
  };
  std::vector<std::vector<double>> f(n + 1, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n || j == m) {
        f[i][j] = static_cast<double>((n - i) + (m - j));
        continue;
      }
      double best = std::min(f[i + 1][j], f[i][j + 1]) + 1.0;
      for (std::size_t a = i + 1; a <= n; ++a) {
        for (std::size_t b = j + 1; b <= m; ++b) best = std::min(best, table_ned(join(gt, i, a), join(pred, j, b)) + f[a][b]);
      }
      f[i][j] = best;
    }
  }
  return f[0][0];
}

struct SyntheticCase {
  std::vector<std::string> gt;
  std::vector<std::string> pred;
};

inline std::string describe(const SyntheticCase& c) {
  std::ostringstream os;
  os << "gt:";
  for (const auto& s : c.gt) os << " [" << s << "]";
  os << " pred:";
  for (const auto& s : c.pred) os << " [" << s << "]";
  return os.str();
}

// Source paragraphs cut differently on each side: each paragraph may be
// split at a word boundary, and adjacent paragraphs may be joined. The
// prediction then gets up to `perturb` substituted characters.
inline SyntheticCase synthetic_case(std::mt19937& rng, int perturb) {
  static const std::vector<std::string> vocab = {
      "model",  "layout", "table",  "paper",   "result", "method", "figure", "value",  "reading", "order",
      "region", "text",   "header", "formula", "score",  "parser", "block",  "column", "metric",  "sample"};
  const std::size_t paragraphs = 1 + rng() % 4;
  std::vector<std::vector<std::string>> source;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    std::vector<std::string> words(4 + rng() % 7);
    for (auto& w : words) w = vocab[rng() % vocab.size()];
    source.push_back(words);
  }
  auto cut = [&]() {
    std::vector<std::string> pieces;
    std::vector<std::string> pending;
    auto flush = [&](std::vector<std::string>& words) {
      std::string s;
      for (std::size_t k = 0; k < words.size(); ++k) s += (k ? " " : "") + words[k];
      pieces.push_back(s);
      words.clear();
    };
    for (std::size_t p = 0; p < source.size(); ++p) {
      const auto& words = source[p];
      const std::size_t split = rng() % 3 == 0 ? 2 + rng() % (words.size() - 3) : words.size();
      for (std::size_t k = 0; k < words.size(); ++k) {
        if (k == split) flush(pending);
        pending.push_back(words[k]);
      }
      const bool join_next = p + 1 < source.size() && rng() % 4 == 0;
      if (!join_next) flush(pending);
    }
    if (!pending.empty()) flush(pending);
    return pieces;
  };
  SyntheticCase c{cut(), cut()};
  const int edits = perturb > 0 ? 1 + static_cast<int>(rng() % static_cast<unsigned>(perturb)) : 0;
  for (int e = 0; e < edits; ++e) {
    std::string& s = c.pred[rng() % c.pred.size()];
    std::size_t pos = rng() % s.size();
    while (s[pos] == ' ') pos = rng() % s.size();
    s[pos] = s[pos] == 'q' ? 'j' : 'q';
  }
  return c;
}

}  // namespace oracle
