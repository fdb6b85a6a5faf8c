#include "docparse_eval/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/unicode.hpp"

namespace docparse_eval {

// ---------------------------------------------------------------------------
// Edit distance

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  // Pattern = shorter string, processed in 64-bit blocks (Hyyrö 2003).
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t m = a.size();
  if (m == 0) return b.size();

  std::unordered_map<char32_t, std::size_t> alphabet;
  for (char32_t c : a) alphabet.emplace(c, alphabet.size());
  const std::size_t words = (m + 63) / 64;
  std::vector<std::uint64_t> peq(alphabet.size() * words, 0);
  for (std::size_t i = 0; i < m; ++i) {
    peq[alphabet[a[i]] * words + i / 64] |= std::uint64_t{1} << (i % 64);
  }

  std::vector<std::uint64_t> vp(words, ~std::uint64_t{0});
  std::vector<std::uint64_t> vn(words, 0);
  const std::uint64_t last = std::uint64_t{1} << ((m - 1) % 64);
  std::size_t dist = m;

  for (char32_t c : b) {
    const auto it = alphabet.find(c);
    const std::uint64_t* eq = it == alphabet.end() ? nullptr : &peq[it->second * words];
    std::uint64_t hp_carry = 1;
    std::uint64_t hn_carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t pm = eq ? eq[w] : 0;
      const std::uint64_t x = pm | hn_carry;
      const std::uint64_t d0 = (((x & vp[w]) + vp[w]) ^ vp[w]) | x | vn[w];
      std::uint64_t hp = vn[w] | ~(d0 | vp[w]);
      std::uint64_t hn = d0 & vp[w];
      const std::uint64_t hp_in = hp_carry;
      const std::uint64_t hn_in = hn_carry;
      if (w + 1 < words) {
        hp_carry = hp >> 63;
        hn_carry = hn >> 63;
      } else {
        hp_carry = (hp & last) ? 1 : 0;
        hn_carry = (hn & last) ? 1 : 0;
      }
      hp = (hp << 1) | hp_in;
      hn = (hn << 1) | hn_in;
      vp[w] = hn | ~(d0 | hp);
      vn[w] = hp & d0;
    }
    dist = dist + hp_carry - hn_carry;
  }
  return dist;
}

std::size_t levenshtein(std::string_view a, std::string_view b) { return levenshtein(utf8_to_u32(a), utf8_to_u32(b)); }

double normalized_edit_distance(std::u32string_view a, std::u32string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  return normalized_edit_distance(utf8_to_u32(a), utf8_to_u32(b));
}

// ---------------------------------------------------------------------------
// HTML tables

namespace {

using U32 = std::u32string;
using U32V = std::u32string_view;
constexpr std::size_t npos = U32::npos;

bool is_name_char(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9') || c == U'-' ||
         c == U'_' || c == U':';
}

struct Tag {
  std::string name;  // lowercased ASCII
  bool closing = false;
  std::optional<int> colspan;
  std::optional<int> rowspan;
};

int parse_span_attr(U32V v) {
  long value = 0;
  bool any = false;
  for (char32_t c : v) {
    if (c >= U'0' && c <= U'9') {
      value = value * 10 + static_cast<long>(c - U'0');
      any = true;
      if (value > 100000) break;
    } else if (!is_space(c)) {
      break;
    }
  }
  return any && value >= 1 ? static_cast<int>(value) : 1;
}

// Parses the tag spanning s[b..e) where s[b] == '<' and s[e-1] == '>'.
Tag parse_tag(U32V s, std::size_t b, std::size_t e) {
  Tag tag;
  std::size_t i = b + 1;
  if (i < e && s[i] == U'/') {
    tag.closing = true;
    ++i;
  }
  while (i < e && is_name_char(s[i])) tag.name.push_back(static_cast<char>(ascii_lower(s[i++])));
  while (i < e) {
    while (i < e && (is_space(s[i]) || s[i] == U'/')) ++i;
    std::string attr;
    while (i < e && s[i] != U'=' && s[i] != U'>' && !is_space(s[i]) && s[i] != U'/') {
      attr.push_back(static_cast<char>(ascii_lower(s[i]) < 128 ? ascii_lower(s[i]) : U'?'));
      ++i;
    }
    while (i < e && is_space(s[i])) ++i;
    U32 value;
    if (i < e && s[i] == U'=') {
      ++i;
      while (i < e && is_space(s[i])) ++i;
      if (i < e && (s[i] == U'"' || s[i] == U'\'')) {
        const char32_t q = s[i++];
        while (i < e && s[i] != q) value.push_back(s[i++]);
        if (i < e) ++i;
      } else {
        while (i < e && !is_space(s[i]) && s[i] != U'>') value.push_back(s[i++]);
      }
    }
    if (attr == "colspan") tag.colspan = parse_span_attr(value);
    if (attr == "rowspan") tag.rowspan = parse_span_attr(value);
    if (attr.empty() && i < e && s[i] == U'>') break;
    if (attr.empty() && value.empty()) ++i;
  }
  return tag;
}

void decode_entity(U32V s, std::size_t& i, U32& out) {
  // s[i] == '&'
  const std::size_t semi = s.find(U';', i);
  if (semi == npos || semi - i > 10) {
    out.push_back(s[i++]);
    return;
  }
  const U32V name = s.substr(i + 1, semi - i - 1);
  char32_t cp = 0;
  if (!name.empty() && name[0] == U'#') {
    bool hex = name.size() > 1 && (name[1] == U'x' || name[1] == U'X');
    std::uint32_t v = 0;
    bool any = false;
    for (std::size_t k = hex ? 2 : 1; k < name.size(); ++k) {
      const char32_t c = name[k];
      std::uint32_t d;
      if (c >= U'0' && c <= U'9') {
        d = c - U'0';
      } else if (hex && ascii_lower(c) >= U'a' && ascii_lower(c) <= U'f') {
        d = ascii_lower(c) - U'a' + 10;
      } else {
        any = false;
        break;
      }
      v = v * (hex ? 16 : 10) + d;
      any = true;
      if (v > 0x10FFFF) break;
    }
    if (any && v > 0 && v <= 0x10FFFF) cp = v;
  } else if (name == U"amp") {
    cp = U'&';
  } else if (name == U"lt") {
    cp = U'<';
  } else if (name == U"gt") {
    cp = U'>';
  } else if (name == U"quot") {
    cp = U'"';
  } else if (name == U"apos") {
    cp = U'\'';
  } else if (name == U"nbsp") {
    cp = U' ';
  }
  if (cp == 0) {
    out.push_back(s[i++]);
    return;
  }
  out.push_back(cp);
  i = semi + 1;
}

class TableBuilder {
 public:
  TableTree tree;

  TableBuilder() { tree.nodes.push_back({"table", {}, 1, 1, {}}); }

  void open_section(const std::string& label) {
    close_row("");
    section_ = add(0, label);
  }

  void open_row() {
    close_row("<tr>");
    row_ = add(section_.value_or(0), "tr");
  }

  void open_cell(const Tag& tag) {
    close_cell("<td>");
    if (!row_) {
      warn("cell outside a row; row opened implicitly");
      row_ = add(section_.value_or(0), "tr");
    }
    cell_ = add(*row_, "td");
    tree.nodes[*cell_].colspan = tag.colspan.value_or(1);
    tree.nodes[*cell_].rowspan = tag.rowspan.value_or(1);
  }

  void close_cell(const char* reason) {
    if (!cell_) return;
    if (*reason) warn(std::string("unclosed <td> closed by ") + reason);
    auto& node = tree.nodes[*cell_];
    node.text = collapse_whitespace(text_);
    text_.clear();
    cell_.reset();
  }

  void close_row(const char* reason) {
    close_cell(reason);
    if (!row_) return;
    if (*reason) warn(std::string("unclosed <tr> closed by ") + reason);
    row_.reset();
  }

  void end_cell() { close_cell(""); }
  void end_row() { close_row(""); }
  void end_section() {
    close_row("</section>");
    section_.reset();
  }

  void finish(bool closed) {
    if (!closed) {
      if (cell_) warn("unclosed <td> at end of input");
      if (row_) warn("unclosed <tr> at end of input");
      warn("unclosed <table> at end of input");
    }
    close_row("");
  }

  bool in_cell() const { return cell_.has_value(); }
  void text(U32V t) { text_.append(t); }
  void text(char32_t c) { text_.push_back(c); }

 private:
  std::size_t add(std::size_t parent, const std::string& label) {
    tree.nodes.push_back({label, {}, 1, 1, {}});
    const std::size_t id = tree.nodes.size() - 1;
    tree.nodes[parent].children.push_back(id);
    return id;
  }

  void warn(std::string msg) { tree.warnings.push_back(std::move(msg)); }

  std::optional<std::size_t> section_;
  std::optional<std::size_t> row_;
  std::optional<std::size_t> cell_;
  U32 text_;
};

bool is_table_open(U32V s, std::size_t p) {
  if (!starts_with_ci(s, p, U"<table")) return false;
  const std::size_t q = p + 6;
  return q >= s.size() || s[q] == U'>' || s[q] == U'/' || is_space(s[q]);
}

}  // namespace

TableTree parse_html_table(std::string_view html) {
  const U32 s = utf8_to_u32(html);
  std::size_t start = npos;
  for (std::size_t p = s.find(U'<'); p != npos; p = s.find(U'<', p + 1)) {
    if (is_table_open(s, p)) {
      start = p;
      break;
    }
  }
  if (start == npos) throw InputError("no <table> element in table payload");

  TableBuilder b;
  std::size_t i = s.find(U'>', start);
  if (i == npos) {
    b.finish(false);
    return std::move(b.tree);
  }
  ++i;
  int nested = 0;  // tables nested inside a cell are flattened to text
  bool closed = false;
  while (i < s.size() && !closed) {
    const char32_t c = s[i];
    if (c == U'<') {
      if (s.substr(i, 4) == U"<!--") {
        const std::size_t end = s.find(U"-->", i + 4);
        i = end == npos ? s.size() : end + 3;
        continue;
      }
      const bool looks_like_tag = i + 1 < s.size() && (s[i + 1] == U'/' || is_name_char(s[i + 1]) || s[i + 1] == U'!');
      const std::size_t gt = looks_like_tag ? s.find(U'>', i) : npos;
      if (gt == npos) {
        if (b.in_cell()) b.text(c);
        ++i;
        continue;
      }
      const Tag tag = parse_tag(s, i, gt + 1);
      i = gt + 1;
      const std::string& n = tag.name;
      if (nested > 0) {
        if (n == "table") nested += tag.closing ? -1 : 1;
        else if (n == "td" || n == "th" || n == "tr" || n == "br") b.text(U' ');
        continue;
      }
      if (n == "table") {
        if (tag.closing) {
          closed = true;
        } else if (b.in_cell()) {
          ++nested;
        }
        continue;
      }
      if (n == "td" || n == "th") {
        if (tag.closing) b.end_cell();
        else b.open_cell(tag);
        continue;
      }
      if (n == "tr") {
        if (tag.closing) b.end_row();
        else b.open_row();
        continue;
      }
      if (n == "thead" || n == "tbody" || n == "tfoot") {
        if (tag.closing) b.end_section();
        else b.open_section(n == "thead" ? "thead" : "tbody");
        continue;
      }
      if (n == "br" || n == "p" || n == "div" || n == "li") {
        if (b.in_cell()) b.text(U' ');
      }
      continue;
    }
    if (!b.in_cell()) {
      ++i;
      continue;
    }
    if (c == U'&') {
      U32 decoded;
      decode_entity(s, i, decoded);
      b.text(decoded);
      continue;
    }
    b.text(c);
    ++i;
  }
  b.finish(closed);
  return std::move(b.tree);
}

namespace {

std::string escape_html(U32V text) {
  std::string out;
  U32 run;
  auto flush = [&] {
    out += u32_to_utf8(run);
    run.clear();
  };
  for (char32_t c : text) {
    if (c == U'&' || c == U'<' || c == U'>') {
      flush();
      out += c == U'&' ? "&amp;" : c == U'<' ? "&lt;" : "&gt;";
    } else {
      run.push_back(c);
    }
  }
  flush();
  return out;
}

void serialize_node(const TableTree& t, std::size_t id, std::string& out) {
  const TableNode& n = t.nodes[id];
  out += "<" + n.label;
  if (n.colspan > 1) out += " colspan=\"" + std::to_string(n.colspan) + "\"";
  if (n.rowspan > 1) out += " rowspan=\"" + std::to_string(n.rowspan) + "\"";
  out += ">";
  if (n.label == "td") out += escape_html(n.text);
  for (std::size_t c : n.children) serialize_node(t, c, out);
  out += "</" + n.label + ">";
}

double substitution_cost(const TableNode& a, const TableNode& b) {
  if (a.label != b.label || a.colspan != b.colspan || a.rowspan != b.rowspan) return 1.0;
  if (a.label == "td") return normalized_edit_distance(a.text, b.text);
  return 0.0;
}

struct Postorder {
  std::vector<std::size_t> node;  // postorder index -> node id
  std::vector<std::size_t> lml;   // postorder index -> postorder index of leftmost leaf
  std::vector<std::size_t> keyroots;
};

Postorder postorder(const TableTree& t) {
  Postorder p;
  const std::size_t n = t.size();
  p.node.reserve(n);
  p.lml.reserve(n);
  // Iterative postorder keeping the leftmost-leaf index of each subtree.
  struct Frame {
    std::size_t id;
    std::size_t next_child;
    std::size_t first_post;
  };
  std::vector<Frame> stack;
  if (n > 0) stack.push_back({0, 0, std::numeric_limits<std::size_t>::max()});
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& children = t.nodes[f.id].children;
    if (f.next_child < children.size()) {
      const std::size_t child = children[f.next_child++];
      stack.push_back({child, 0, std::numeric_limits<std::size_t>::max()});
      continue;
    }
    const std::size_t post = p.node.size();
    p.node.push_back(f.id);
    const std::size_t leftmost = f.first_post == std::numeric_limits<std::size_t>::max() ? post : f.first_post;
    p.lml.push_back(leftmost);
    stack.pop_back();
    if (!stack.empty() && stack.back().first_post == std::numeric_limits<std::size_t>::max()) {
      stack.back().first_post = leftmost;
    }
  }
  // Keyroots: the highest node for each distinct leftmost leaf.
  std::vector<std::size_t> highest(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t k = 0; k < n; ++k) highest[p.lml[k]] = k;
  for (std::size_t k = 0; k < n; ++k) {
    if (highest[k] != std::numeric_limits<std::size_t>::max()) p.keyroots.push_back(highest[k]);
  }
  std::sort(p.keyroots.begin(), p.keyroots.end());
  return p;
}

}  // namespace

std::string serialize_table(const TableTree& tree) {
  std::string out;
  if (!tree.nodes.empty()) serialize_node(tree, 0, out);
  return out;
}

double tree_edit_distance(const TableTree& a, const TableTree& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0) return static_cast<double>(m);
  if (m == 0) return static_cast<double>(n);
  const Postorder pa = postorder(a);
  const Postorder pb = postorder(b);

  std::vector<double> td(n * m, 0.0);
  std::vector<double> fd((n + 1) * (m + 1), 0.0);
  auto TD = [&](std::size_t i, std::size_t j) -> double& { return td[i * m + j]; };

  for (std::size_t kr_i : pa.keyroots) {
    for (std::size_t kr_j : pb.keyroots) {
      const std::size_t li = pa.lml[kr_i];
      const std::size_t lj = pb.lml[kr_j];
      const std::size_t rows = kr_i - li + 2;
      const std::size_t cols = kr_j - lj + 2;
      auto FD = [&](std::size_t x, std::size_t y) -> double& { return fd[x * cols + y]; };
      FD(0, 0) = 0.0;
      for (std::size_t x = 1; x < rows; ++x) FD(x, 0) = FD(x - 1, 0) + 1.0;
      for (std::size_t y = 1; y < cols; ++y) FD(0, y) = FD(0, y - 1) + 1.0;
      for (std::size_t x = 1; x < rows; ++x) {
        const std::size_t i = li + x - 1;
        for (std::size_t y = 1; y < cols; ++y) {
          const std::size_t j = lj + y - 1;
          const double del = FD(x - 1, y) + 1.0;
          const double ins = FD(x, y - 1) + 1.0;
          if (pa.lml[i] == li && pb.lml[j] == lj) {
            const double sub = FD(x - 1, y - 1) + substitution_cost(a.nodes[pa.node[i]], b.nodes[pb.node[j]]);
            FD(x, y) = std::min({del, ins, sub});
            TD(i, j) = FD(x, y);
          } else {
            const std::size_t xp = pa.lml[i] - li;
            const std::size_t yp = pb.lml[j] - lj;
            FD(x, y) = std::min({del, ins, FD(xp, yp) + TD(i, j)});
          }
        }
      }
    }
  }
  return TD(n - 1, m - 1);
}

double teds(const TableTree& gt, const TableTree& pred) {
  const std::size_t longest = std::max(gt.size(), pred.size());
  if (longest == 0) return 1.0;
  const double score = 1.0 - tree_edit_distance(gt, pred) / static_cast<double>(longest);
  return std::clamp(score, 0.0, 1.0);
}

double teds(std::string_view gt_html, std::string_view pred_html) {
  const TableTree gt = parse_html_table(gt_html);
  TableTree pred;
  try {
    pred = parse_html_table(pred_html);
  } catch (const InputError&) {
    return 0.0;
  }
  return teds(gt, pred);
}

// ---------------------------------------------------------------------------
// BLEU

std::vector<std::string> tokenize_latex(std::string_view latex) {
  const std::u32string s = utf8_to_u32(latex);
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto letter = [](char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); };
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (s[i] == U'\\' && i + 1 < s.size() && letter(s[i + 1])) {
      std::size_t j = i + 1;
      while (j < s.size() && letter(s[j])) ++j;
      tokens.push_back(u32_to_utf8(std::u32string_view(s).substr(i, j - i)));
      i = j;
      continue;
    }
    tokens.push_back(u32_to_utf8(std::u32string_view(s).substr(i, 1)));
    ++i;
  }
  return tokens;
}

double bleu(std::string_view reference, std::string_view hypothesis) {
  const auto ref = tokenize_latex(reference);
  const auto hyp = tokenize_latex(hypothesis);
  if (hyp.empty()) return 0.0;
  constexpr std::size_t kMaxOrder = 4;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[std::vector<std::string>(ref.begin() + static_cast<long>(i), ref.begin() + static_cast<long>(i + n))];
    }
    std::map<std::vector<std::string>, std::size_t> hyp_counts;
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[std::vector<std::string>(hyp.begin() + static_cast<long>(i), hyp.begin() + static_cast<long>(i + n))];
      ++total;
    }
    std::size_t matched = 0;
    for (const auto& [gram, count] : hyp_counts) {
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double p;
    if (n == 1) {
      if (matched == 0) return 0.0;
      p = static_cast<double>(matched) / static_cast<double>(total);
    } else {
      p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(p) / static_cast<double>(kMaxOrder);
  }
  const double r = static_cast<double>(ref.size());
  const double c = static_cast<double>(hyp.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * std::exp(log_sum), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Reading order

double order_distance(const std::vector<std::string>& expected, const std::vector<std::string>& observed) {
  const std::size_t longest = std::max(expected.size(), observed.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(sequence_edit_distance(expected, observed)) / static_cast<double>(longest);
}

double reading_order_score(const GroundTruthPage& page, const FilteredMatch& match, const ExtractedDoc& extracted) {
  struct Entry {
    int order;
    std::size_t position;
    std::string id;
  };
  std::vector<Entry> gt;
  for (std::size_t k = 0; k < match.gt_units.size(); ++k) {
    if (k < match.gt_ignored.size() && match.gt_ignored[k]) continue;
    const Block* block = page.find_block(match.gt_units[k].id);
    if (!block || !block->order) continue;
    gt.push_back({*block->order, k, match.gt_units[k].id});
  }
  if (gt.empty()) return 0.0;
  std::stable_sort(gt.begin(), gt.end(), [](const Entry& a, const Entry& b) {
    return a.order != b.order ? a.order < b.order : a.position < b.position;
  });

  // Start offset of the prediction group each GT unit landed in.
  std::vector<std::optional<std::size_t>> start(match.gt_units.size());
  for (const auto& pair : match.pairs) {
    std::size_t s = std::numeric_limits<std::size_t>::max();
    for (std::size_t p : pair.pred) {
      const std::size_t el = match.pred_units[p].source;
      if (el < extracted.elements.size()) s = std::min(s, extracted.elements[el].span.start);
    }
    if (s == std::numeric_limits<std::size_t>::max()) continue;
    for (std::size_t g : pair.gt) start[g] = s;
  }

  std::vector<std::string> expected;
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::string>> placed;
  for (std::size_t rank = 0; rank < gt.size(); ++rank) {
    expected.push_back(gt[rank].id);
    if (const auto& s = start[gt[rank].position]) placed.push_back({{*s, rank}, gt[rank].id});
  }
  std::sort(placed.begin(), placed.end());
  std::vector<std::string> observed;
  for (auto& p : placed) observed.push_back(std::move(p.second));
  return order_distance(expected, observed);
}

// ---------------------------------------------------------------------------
// Registry

void MetricRegistry::add(const std::string& name, PairMetric fn) {
  std::lock_guard lock(mutex_);
  metrics_[name] = std::move(fn);
}

bool MetricRegistry::remove(const std::string& name) {
  std::lock_guard lock(mutex_);
  return metrics_.erase(name) > 0;
}

bool MetricRegistry::has(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return metrics_.count(name) > 0;
}

PairMetric MetricRegistry::get(const std::string& name) const {
  std::lock_guard lock(mutex_);
  const auto it = metrics_.find(name);
  return it == metrics_.end() ? PairMetric{} : it->second;
}

std::vector<std::string> MetricRegistry::names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [k, v] : metrics_) out.push_back(k);
  return out;
}

MetricRegistry& metric_registry() {
  static MetricRegistry* registry = [] {
    auto* r = new MetricRegistry();
    r->add("edit", [](std::string_view gt, std::string_view pred) { return normalized_edit_distance(gt, pred); });
    r->add("teds", [](std::string_view gt, std::string_view pred) { return teds(gt, pred); });
    r->add("bleu", [](std::string_view gt, std::string_view pred) { return bleu(gt, pred); });
    return r;
  }();
  return *registry;
}

}  // namespace docparse_eval
