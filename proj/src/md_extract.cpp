#include "docparse_eval/md_extract.hpp"

#include <algorithm>
#include <optional>
#include <unordered_map>
#include <utility>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/unicode.hpp"

namespace docparse_eval {

namespace {

using U32 = std::u32string;
using U32V = std::u32string_view;
constexpr std::size_t npos = U32::npos;

U32 ascii32(std::string_view s) { return U32(s.begin(), s.end()); }

bool is_ascii_letter(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }

bool is_blank_line(U32V line) {
  return std::all_of(line.begin(), line.end(), [](char32_t c) { return is_space(c); });
}

// ---------------------------------------------------------------------------
// Symbol tables for inline math.

struct Sym {
  const char* name;
  const char32_t* value;
};

// clang-format off
constexpr Sym kSymbols[] = {
  {"alpha", U"α"}, {"beta", U"β"}, {"gamma", U"γ"}, {"delta", U"δ"}, {"epsilon", U"ϵ"},
  {"varepsilon", U"ε"}, {"zeta", U"ζ"}, {"eta", U"η"}, {"theta", U"θ"}, {"vartheta", U"ϑ"},
  {"iota", U"ι"}, {"kappa", U"κ"}, {"lambda", U"λ"}, {"mu", U"μ"}, {"nu", U"ν"},
  {"xi", U"ξ"}, {"omicron", U"ο"}, {"pi", U"π"}, {"varpi", U"ϖ"}, {"rho", U"ρ"},
  {"varrho", U"ϱ"}, {"sigma", U"σ"}, {"varsigma", U"ς"}, {"tau", U"τ"}, {"upsilon", U"υ"},
  {"phi", U"ϕ"}, {"varphi", U"φ"}, {"chi", U"χ"}, {"psi", U"ψ"}, {"omega", U"ω"},
  {"Gamma", U"Γ"}, {"Delta", U"Δ"}, {"Theta", U"Θ"}, {"Lambda", U"Λ"}, {"Xi", U"Ξ"},
  {"Pi", U"Π"}, {"Sigma", U"Σ"}, {"Upsilon", U"Υ"}, {"Phi", U"Φ"}, {"Psi", U"Ψ"},
  {"Omega", U"Ω"},

  {"leq", U"≤"}, {"le", U"≤"}, {"geq", U"≥"}, {"ge", U"≥"}, {"neq", U"≠"}, {"ne", U"≠"},
  {"approx", U"≈"}, {"equiv", U"≡"}, {"sim", U"∼"}, {"simeq", U"≃"}, {"cong", U"≅"},
  {"propto", U"∝"}, {"ll", U"≪"}, {"gg", U"≫"}, {"subset", U"⊂"}, {"supset", U"⊃"},
  {"subseteq", U"⊆"}, {"supseteq", U"⊇"}, {"in", U"∈"}, {"notin", U"∉"}, {"ni", U"∋"},
  {"leqslant", U"⩽"}, {"geqslant", U"⩾"}, {"prec", U"≺"}, {"succ", U"≻"}, {"preceq", U"⪯"},
  {"succeq", U"⪰"}, {"perp", U"⊥"}, {"parallel", U"∥"}, {"mid", U"∣"}, {"models", U"⊨"},
  {"vdash", U"⊢"}, {"asymp", U"≍"}, {"doteq", U"≐"}, {"lesssim", U"≲"}, {"gtrsim", U"≳"},

  {"to", U"→"}, {"rightarrow", U"→"}, {"leftarrow", U"←"}, {"gets", U"←"},
  {"leftrightarrow", U"↔"}, {"Rightarrow", U"⇒"}, {"Leftarrow", U"⇐"}, {"Leftrightarrow", U"⇔"},
  {"longrightarrow", U"⟶"}, {"longleftarrow", U"⟵"}, {"Longrightarrow", U"⟹"},
  {"Longleftarrow", U"⟸"}, {"longleftrightarrow", U"⟷"}, {"Longleftrightarrow", U"⟺"},
  {"implies", U"⟹"}, {"iff", U"⟺"}, {"mapsto", U"↦"}, {"uparrow", U"↑"}, {"downarrow", U"↓"},
  {"Uparrow", U"⇑"}, {"Downarrow", U"⇓"}, {"nearrow", U"↗"}, {"searrow", U"↘"},
  {"rightleftharpoons", U"⇌"}, {"hookrightarrow", U"↪"},

  {"times", U"×"}, {"div", U"÷"}, {"pm", U"±"}, {"mp", U"∓"}, {"cdot", U"⋅"}, {"ast", U"∗"},
  {"star", U"⋆"}, {"circ", U"∘"}, {"bullet", U"∙"}, {"oplus", U"⊕"}, {"ominus", U"⊖"},
  {"otimes", U"⊗"}, {"odot", U"⊙"}, {"cap", U"∩"}, {"cup", U"∪"}, {"wedge", U"∧"},
  {"land", U"∧"}, {"vee", U"∨"}, {"lor", U"∨"}, {"setminus", U"∖"}, {"backslash", U"⧵"},
  {"sqcup", U"⊔"}, {"uplus", U"⊎"}, {"dagger", U"†"}, {"ddagger", U"‡"}, {"amalg", U"⨿"},

  {"sum", U"∑"}, {"prod", U"∏"}, {"coprod", U"∐"}, {"int", U"∫"}, {"iint", U"∬"},
  {"iiint", U"∭"}, {"oint", U"∮"}, {"bigcup", U"⋃"}, {"bigcap", U"⋂"}, {"bigoplus", U"⨁"},
  {"bigotimes", U"⨂"}, {"bigvee", U"⋁"}, {"bigwedge", U"⋀"},

  {"cdots", U"⋯"}, {"ldots", U"…"}, {"dots", U"…"}, {"vdots", U"⋮"}, {"ddots", U"⋱"},

  {"infty", U"∞"}, {"partial", U"∂"}, {"nabla", U"∇"}, {"forall", U"∀"}, {"exists", U"∃"},
  {"nexists", U"∄"}, {"emptyset", U"∅"}, {"varnothing", U"∅"}, {"neg", U"¬"}, {"lnot", U"¬"},
  {"angle", U"∠"}, {"triangle", U"△"}, {"prime", U"′"}, {"hbar", U"ℏ"}, {"ell", U"ℓ"},
  {"Re", U"ℜ"}, {"Im", U"ℑ"}, {"aleph", U"ℵ"}, {"wp", U"℘"}, {"surd", U"√"}, {"top", U"⊤"},
  {"bot", U"⊥"}, {"degree", U"°"}, {"circledast", U"⊛"}, {"square", U"□"}, {"Box", U"□"},
  {"Diamond", U"◇"}, {"clubsuit", U"♣"}, {"heartsuit", U"♡"}, {"spadesuit", U"♠"},
  {"diamondsuit", U"♢"}, {"checkmark", U"✓"}, {"therefore", U"∴"}, {"because", U"∵"},
  {"angstrom", U"Å"}, {"AA", U"Å"}, {"S", U"§"}, {"P", U"¶"}, {"copyright", U"©"},
  {"dag", U"†"}, {"ddag", U"‡"},

  {"langle", U"⟨"}, {"rangle", U"⟩"}, {"lceil", U"⌈"}, {"rceil", U"⌉"}, {"lfloor", U"⌊"},
  {"rfloor", U"⌋"}, {"lvert", U"|"}, {"rvert", U"|"}, {"vert", U"|"}, {"Vert", U"‖"},
  {"lVert", U"‖"}, {"rVert", U"‖"}, {"lbrace", U"{"}, {"rbrace", U"}"}, {"lbrack", U"["},
  {"rbrack", U"]"},

  {"sin", U"sin"}, {"cos", U"cos"}, {"tan", U"tan"}, {"cot", U"cot"}, {"sec", U"sec"},
  {"csc", U"csc"}, {"arcsin", U"arcsin"}, {"arccos", U"arccos"}, {"arctan", U"arctan"},
  {"sinh", U"sinh"}, {"cosh", U"cosh"}, {"tanh", U"tanh"}, {"log", U"log"}, {"ln", U"ln"},
  {"lg", U"lg"}, {"exp", U"exp"}, {"lim", U"lim"}, {"limsup", U"limsup"}, {"liminf", U"liminf"},
  {"max", U"max"}, {"min", U"min"}, {"sup", U"sup"}, {"inf", U"inf"}, {"det", U"det"},
  {"dim", U"dim"}, {"ker", U"ker"}, {"arg", U"arg"}, {"deg", U"deg"}, {"gcd", U"gcd"},
  {"Pr", U"Pr"}, {"mod", U"mod"}, {"bmod", U"mod"},
};

constexpr std::pair<char32_t, char32_t> kSuperscripts[] = {
  {U'0', U'⁰'}, {U'1', U'¹'}, {U'2', U'²'}, {U'3', U'³'}, {U'4', U'⁴'}, {U'5', U'⁵'},
  {U'6', U'⁶'}, {U'7', U'⁷'}, {U'8', U'⁸'}, {U'9', U'⁹'}, {U'+', U'⁺'}, {U'-', U'⁻'},
  {U'−', U'⁻'}, {U'=', U'⁼'}, {U'(', U'⁽'}, {U')', U'⁾'}, {U'a', U'ᵃ'}, {U'b', U'ᵇ'},
  {U'c', U'ᶜ'}, {U'd', U'ᵈ'}, {U'e', U'ᵉ'}, {U'f', U'ᶠ'}, {U'g', U'ᵍ'}, {U'h', U'ʰ'},
  {U'i', U'ⁱ'}, {U'j', U'ʲ'}, {U'k', U'ᵏ'}, {U'l', U'ˡ'}, {U'm', U'ᵐ'}, {U'n', U'ⁿ'},
  {U'o', U'ᵒ'}, {U'p', U'ᵖ'}, {U'r', U'ʳ'}, {U's', U'ˢ'}, {U't', U'ᵗ'}, {U'u', U'ᵘ'},
  {U'v', U'ᵛ'}, {U'w', U'ʷ'}, {U'x', U'ˣ'}, {U'y', U'ʸ'}, {U'z', U'ᶻ'}, {U'T', U'ᵀ'},
  {U'′', U'′'}, {U'∘', U'°'},
};

constexpr std::pair<char32_t, char32_t> kSubscripts[] = {
  {U'0', U'₀'}, {U'1', U'₁'}, {U'2', U'₂'}, {U'3', U'₃'}, {U'4', U'₄'}, {U'5', U'₅'},
  {U'6', U'₆'}, {U'7', U'₇'}, {U'8', U'₈'}, {U'9', U'₉'}, {U'+', U'₊'}, {U'-', U'₋'},
  {U'−', U'₋'}, {U'=', U'₌'}, {U'(', U'₍'}, {U')', U'₎'}, {U'a', U'ₐ'}, {U'e', U'ₑ'},
  {U'h', U'ₕ'}, {U'i', U'ᵢ'}, {U'j', U'ⱼ'}, {U'k', U'ₖ'}, {U'l', U'ₗ'}, {U'm', U'ₘ'},
  {U'n', U'ₙ'}, {U'o', U'ₒ'}, {U'p', U'ₚ'}, {U'r', U'ᵣ'}, {U's', U'ₛ'}, {U't', U'ₜ'},
  {U'u', U'ᵤ'}, {U'v', U'ᵥ'}, {U'x', U'ₓ'},
};
// clang-format on

const std::unordered_map<U32, U32>& symbol_map() {
  static const auto* table = [] {
    auto* m = new std::unordered_map<U32, U32>();
    for (const auto& s : kSymbols) m->emplace(ascii32(s.name), U32(s.value));
    return m;
  }();
  return *table;
}

template <std::size_t N>
std::optional<U32> map_script(U32V text, const std::pair<char32_t, char32_t> (&table)[N]) {
  if (text.empty()) return std::nullopt;
  U32 out;
  for (char32_t c : text) {
    auto it = std::find_if(std::begin(table), std::end(table), [c](const auto& p) { return p.first == c; });
    if (it == std::end(table)) return std::nullopt;
    out.push_back(it->second);
  }
  return out;
}

bool in_list(U32V name, std::initializer_list<std::string_view> names) {
  for (auto n : names) {
    if (name.size() == n.size() && std::equal(name.begin(), name.end(), n.begin())) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// LaTeX token helpers shared by math conversion and table conversion.

// Index one past the brace matching s[open] == '{', or npos.
std::size_t match_brace(U32V s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == U'\\') {
      ++i;
      continue;
    }
    if (s[i] == U'{') ++depth;
    if (s[i] == U'}' && --depth == 0) return i + 1;
  }
  return npos;
}

void skip_spaces(U32V s, std::size_t& i) {
  while (i < s.size() && is_space(s[i])) ++i;
}

// Reads the next macro argument: a braced group (without braces), a control
// sequence, or one character.
U32V read_arg(U32V s, std::size_t& i) {
  skip_spaces(s, i);
  if (i >= s.size()) return {};
  if (s[i] == U'{') {
    const std::size_t end = match_brace(s, i);
    if (end == npos) {
      U32V inner = s.substr(i + 1);
      i = s.size();
      return inner;
    }
    U32V inner = s.substr(i + 1, end - i - 2);
    i = end;
    return inner;
  }
  const std::size_t b = i;
  if (s[i] == U'\\' && i + 1 < s.size()) {
    ++i;
    if (is_ascii_letter(s[i])) {
      while (i < s.size() && is_ascii_letter(s[i])) ++i;
    } else {
      ++i;
    }
    return s.substr(b, i - b);
  }
  ++i;
  return s.substr(b, 1);
}

// Skips an optional [..] or (..) argument.
void skip_optional(U32V s, std::size_t& i, char32_t open, char32_t close) {
  std::size_t j = i;
  skip_spaces(s, j);
  if (j < s.size() && s[j] == open) {
    const std::size_t e = s.find(close, j + 1);
    i = e == npos ? s.size() : e + 1;
  }
}

U32 convert_latex(U32V s, bool keep_spaces);

void push_space(U32& out, bool keep_spaces) {
  if (keep_spaces && !out.empty() && out.back() != U' ') out.push_back(U' ');
}

void convert_command(U32V name, U32V s, std::size_t& i, U32& out, bool keep_spaces) {
  const auto& syms = symbol_map();
  if (auto it = syms.find(U32(name)); it != syms.end()) {
    out += it->second;
    return;
  }
  if (in_list(name, {"frac", "dfrac", "tfrac", "cfrac"})) {
    U32V num = read_arg(s, i);
    U32V den = read_arg(s, i);
    out += convert_latex(num, keep_spaces);
    out.push_back(U'/');
    out += convert_latex(den, keep_spaces);
    return;
  }
  if (name == U"sqrt") {
    skip_optional(s, i, U'[', U']');
    out.push_back(U'√');
    out += convert_latex(read_arg(s, i), keep_spaces);
    return;
  }
  if (in_list(name, {"quad", "qquad", "enspace", "thinspace", "medspace", "thickspace", "space", "newline"})) {
    push_space(out, keep_spaces);
    return;
  }
  if (in_list(name, {"hspace", "vspace", "label", "begin", "end", "tag", "color", "textcolor", "phantom"})) {
    if (name == U"textcolor") {
      read_arg(s, i);  // colour, then the text itself is kept as a plain group
      return;
    }
    read_arg(s, i);
    return;
  }
  // \left, \right, \big..., \displaystyle and anything unknown drop out;
  // a following braced argument is kept as an ordinary group.
}

U32 convert_latex(U32V s, bool keep_spaces) {
  U32 out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const char32_t c = s[i];
    if (is_space(c) || c == U'~') {
      push_space(out, keep_spaces);
      ++i;
      continue;
    }
    if (c == U'{') {
      const std::size_t end = match_brace(s, i);
      const std::size_t stop = end == npos ? n : end - 1;
      out += convert_latex(s.substr(i + 1, stop - i - 1), keep_spaces);
      i = end == npos ? n : end;
      continue;
    }
    if (c == U'}' || c == U'$') {
      ++i;
      continue;
    }
    if (c == U'^' || c == U'_') {
      ++i;
      const U32 arg = convert_latex(read_arg(s, i), false);
      auto mapped = c == U'^' ? map_script(arg, kSuperscripts) : map_script(arg, kSubscripts);
      out += mapped ? *mapped : arg;
      continue;
    }
    if (c == U'\\') {
      if (i + 1 >= n) {
        ++i;
        continue;
      }
      if (is_ascii_letter(s[i + 1])) {
        std::size_t j = i + 1;
        while (j < n && is_ascii_letter(s[j])) ++j;
        const U32V name = s.substr(i + 1, j - i - 1);
        i = j;
        convert_command(name, s, i, out, keep_spaces);
        continue;
      }
      const char32_t e = s[i + 1];
      i += 2;
      switch (e) {
        case U',':
        case U';':
        case U':':
        case U'!':
        case U'>':
        case U' ':
        case U'\\':
        case U'\n':
          push_space(out, keep_spaces);
          break;
        case U'$':
          break;
        case U'|':
          out.push_back(U'‖');
          break;
        default:
          out.push_back(e);
      }
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string html_escape(U32V text) {
  std::string out;
  for (char32_t c : text) {
    switch (c) {
      case U'&':
        out += "&amp;";
        break;
      case U'<':
        out += "&lt;";
        break;
      case U'>':
        out += "&gt;";
        break;
      default:
        out += u32_to_utf8(U32(1, c));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lines

struct Line {
  std::size_t begin;
  std::size_t end;  // excludes the newline
};

std::vector<Line> split_lines(U32V s) {
  std::vector<Line> lines;
  std::size_t b = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == U'\n') {
      lines.push_back({b, i});
      b = i + 1;
    }
  }
  return lines;
}

// Paragraph ranges (trimmed) following the blank-line rule with the
// single-newline fallback.
std::vector<std::pair<std::size_t, std::size_t>> paragraph_ranges(U32V s) {
  const auto lines = split_lines(s);
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // line index ranges
  std::size_t i = 0;
  while (i < lines.size()) {
    if (is_blank_line(s.substr(lines[i].begin, lines[i].end - lines[i].begin))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lines.size() && !is_blank_line(s.substr(lines[j].begin, lines[j].end - lines[j].begin))) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  if (groups.size() == 1) {
    const auto [gb, ge] = groups.front();
    groups.clear();
    for (std::size_t k = gb; k < ge; ++k) groups.emplace_back(k, k + 1);
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& [gb, ge] : groups) {
    std::size_t b = lines[gb].begin;
    std::size_t e = lines[ge - 1].end;
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    if (b < e) out.emplace_back(b, e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipe tables

std::vector<U32> split_pipe_row(U32V line) {
  U32 t = trim(line);
  std::vector<U32> cells;
  U32 cur;
  bool leading = !t.empty() && t.front() == U'|';
  for (std::size_t i = leading ? 1 : 0; i < t.size(); ++i) {
    if (t[i] == U'\\' && i + 1 < t.size() && t[i + 1] == U'|') {
      cur.push_back(U'|');
      ++i;
      continue;
    }
    if (t[i] == U'|') {
      cells.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur.push_back(t[i]);
  }
  const bool trailing = t.size() > (leading ? 1u : 0u) && t.back() == U'|' && !(t.size() >= 2 && t[t.size() - 2] == U'\\');
  if (!trailing) cells.push_back(trim(cur));
  return cells;
}

bool has_unescaped_pipe(U32V line) {
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == U'\\') {
      ++i;
      continue;
    }
    if (line[i] == U'|') return true;
  }
  return false;
}

bool is_delimiter_cell(U32V cell) {
  std::size_t b = 0;
  std::size_t e = cell.size();
  if (b < e && cell[b] == U':') ++b;
  if (e > b && cell[e - 1] == U':') --e;
  if (b >= e) return false;
  for (std::size_t i = b; i < e; ++i) {
    if (cell[i] != U'-') return false;
  }
  return true;
}

// Number of columns when `line` is a delimiter row, otherwise nullopt.
std::optional<std::size_t> delimiter_columns(U32V line) {
  if (!has_unescaped_pipe(line)) return std::nullopt;
  const auto cells = split_pipe_row(line);
  if (cells.empty()) return std::nullopt;
  for (const auto& c : cells) {
    if (!is_delimiter_cell(c)) return std::nullopt;
  }
  return cells.size();
}

// ---------------------------------------------------------------------------
// LaTeX tables

bool is_latex_table_env(U32V name) {
  return in_list(name, {"table", "table*", "tabular", "tabular*", "tabularx", "tabulary", "longtable", "supertabular"});
}

bool is_tabular_env(U32V name) {
  return in_list(name, {"tabular", "tabular*", "tabularx", "tabulary", "longtable", "supertabular"});
}

struct EnvTag {
  std::size_t begin;  // offset of the backslash
  std::size_t end;    // one past the closing brace
  U32 name;
  bool opening;
};

// Next \begin{..} or \end{..} at or after `from`.
std::optional<EnvTag> next_env_tag(U32V s, std::size_t from) {
  while (true) {
    const std::size_t p = s.find(U'\\', from);
    if (p == npos) return std::nullopt;
    bool opening = false;
    std::size_t after = 0;
    if (s.substr(p, 7) == U"\\begin{") {
      opening = true;
      after = p + 7;
    } else if (s.substr(p, 5) == U"\\end{") {
      after = p + 5;
    } else {
      from = p + 1;
      continue;
    }
    const std::size_t close = s.find(U'}', after);
    if (close == npos || close - after > 32) {
      from = p + 1;
      continue;
    }
    return EnvTag{p, close + 1, U32(s.substr(after, close - after)), opening};
  }
}

U32 strip_rules(U32V row) {
  U32 out;
  std::size_t i = 0;
  while (i < row.size()) {
    if (row[i] == U'\\' && i + 1 < row.size() && is_ascii_letter(row[i + 1])) {
      std::size_t j = i + 1;
      while (j < row.size() && is_ascii_letter(row[j])) ++j;
      const U32V name = row.substr(i + 1, j - i - 1);
      if (in_list(name, {"hline", "toprule", "midrule", "bottomrule", "endhead", "endfirsthead", "endfoot",
                         "endlastfoot", "centering", "small", "footnotesize", "scriptsize", "tiny", "large"})) {
        i = j;
        continue;
      }
      if (in_list(name, {"cline", "hhline", "cmidrule", "caption", "label"})) {
        skip_optional(row, j, U'(', U')');
        skip_optional(row, j, U'[', U']');
        read_arg(row, j);
        i = j;
        continue;
      }
      if (name == U"specialrule") {
        for (int k = 0; k < 3; ++k) read_arg(row, j);
        i = j;
        continue;
      }
      if (name == U"addlinespace") {
        skip_optional(row, j, U'[', U']');
        i = j;
        continue;
      }
      out.append(row.substr(i, j - i));
      i = j;
      continue;
    }
    if (row[i] == U'\\' && i + 1 < row.size()) {
      out.append(row.substr(i, 2));
      i += 2;
      continue;
    }
    out.push_back(row[i++]);
  }
  return out;
}

// Splits at depth-0 occurrences of a separator. For rows the separator is
// "\\" (optionally followed by [len]); for cells it is an unescaped '&'.
std::vector<U32> split_rows(U32V body) {
  std::vector<U32> rows;
  U32 cur;
  int depth = 0;
  std::size_t i = 0;
  while (i < body.size()) {
    const char32_t c = body[i];
    if (c == U'\\' && i + 1 < body.size()) {
      if (body[i + 1] == U'\\' && depth == 0) {
        rows.push_back(cur);
        cur.clear();
        i += 2;
        skip_optional(body, i, U'[', U']');
        continue;
      }
      cur.append(body.substr(i, 2));
      i += 2;
      continue;
    }
    if (c == U'{') ++depth;
    if (c == U'}' && depth > 0) --depth;
    cur.push_back(c);
    ++i;
  }
  rows.push_back(cur);
  return rows;
}

std::vector<U32> split_cells(U32V row) {
  std::vector<U32> cells;
  U32 cur;
  int depth = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const char32_t c = row[i];
    if (c == U'\\' && i + 1 < row.size()) {
      cur.push_back(c);
      cur.push_back(row[++i]);
      continue;
    }
    if (c == U'{') ++depth;
    if (c == U'}' && depth > 0) --depth;
    if (c == U'&' && depth == 0) {
      cells.push_back(cur);
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  cells.push_back(cur);
  return cells;
}

struct LatexCell {
  U32 text;
  int colspan = 1;
  int rowspan = 1;
};

int parse_span_count(U32V arg) {
  int v = 0;
  bool any = false;
  for (char32_t c : arg) {
    if (c >= U'0' && c <= U'9') {
      v = v * 10 + static_cast<int>(c - U'0');
      any = true;
      if (v > 10000) break;
    } else if (!is_space(c)) {
      break;
    }
  }
  return any && v > 0 ? v : 1;
}

LatexCell parse_latex_cell(U32V raw) {
  LatexCell cell;
  U32 t = trim(raw);
  U32V v = t;
  for (int guard = 0; guard < 4; ++guard) {
    std::size_t i = 0;
    if (v.substr(0, 12) == U"\\multicolumn") {
      i = 12;
      cell.colspan = parse_span_count(read_arg(v, i));
      read_arg(v, i);
      v = read_arg(v, i);
      continue;
    }
    if (v.substr(0, 9) == U"\\multirow") {
      i = 9;
      skip_optional(v, i, U'[', U']');
      cell.rowspan = parse_span_count(read_arg(v, i));
      skip_optional(v, i, U'[', U']');
      read_arg(v, i);
      skip_optional(v, i, U'[', U']');
      v = read_arg(v, i);
      continue;
    }
    break;
  }
  cell.text = collapse_whitespace(convert_latex(v, true));
  return cell;
}

std::string latex_body_to_html(U32V body) {
  std::string html = "<table>";
  std::vector<int> covered;
  for (const U32& raw_row : split_rows(body)) {
    const U32 row = strip_rules(raw_row);
    if (is_blank_line(row)) continue;
    std::string tr = "<tr>";
    std::size_t col = 0;
    for (const U32& raw_cell : split_cells(row)) {
      LatexCell cell = parse_latex_cell(raw_cell);
      if (col < covered.size() && covered[col] > 0 && cell.text.empty() && cell.rowspan == 1) {
        col += static_cast<std::size_t>(cell.colspan);
        continue;
      }
      tr += "<td";
      if (cell.colspan > 1) tr += " colspan=\"" + std::to_string(cell.colspan) + "\"";
      if (cell.rowspan > 1) tr += " rowspan=\"" + std::to_string(cell.rowspan) + "\"";
      tr += ">" + html_escape(cell.text) + "</td>";
      const std::size_t width = static_cast<std::size_t>(cell.colspan);
      if (covered.size() < col + width) covered.resize(col + width, 0);
      for (std::size_t k = col; k < col + width; ++k) covered[k] = cell.rowspan;
      col += width;
    }
    for (int& c : covered) {
      if (c > 0) --c;
    }
    html += tr + "</tr>";
  }
  return html + "</table>";
}

// ---------------------------------------------------------------------------
// Extraction state

struct Extractor {
  U32 s;
  std::vector<char> taken;
  std::vector<ExtractedElement> elements;
  std::vector<std::string> warnings;

  explicit Extractor(U32 text) : s(std::move(text)), taken(s.size(), 0) {}

  void take(std::size_t b, std::size_t e, ElementKind kind, std::string content) {
    for (std::size_t i = b; i < e; ++i) {
      s[i] = U' ';
      taken[i] = 1;
    }
    elements.push_back({kind, std::move(content), {b, e}});
  }

  void warn(std::string msg, std::size_t offset) {
    warnings.push_back(std::move(msg) + " at offset " + std::to_string(offset));
  }

  bool is_free(std::size_t b, std::size_t e) const {
    return std::find(taken.begin() + static_cast<long>(b), taken.begin() + static_cast<long>(e), 1) ==
           taken.begin() + static_cast<long>(e);
  }

  // Delimiters of a match that would cross an extracted region are erased
  // so the residual holds no half-usable syntax; the content stays as text.
  void erase(std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e && i < s.size(); ++i) {
      if (s[i] != U'\n') s[i] = U' ';
    }
  }

  void latex_tables() {
    struct Open {
      EnvTag tag;
    };
    std::vector<Open> stack;
    std::vector<std::pair<std::size_t, std::size_t>> regions;
    std::size_t from = 0;
    while (auto tag = next_env_tag(s, from)) {
      from = tag->end;
      if (!is_latex_table_env(tag->name)) continue;
      if (tag->opening) {
        stack.push_back({*tag});
        continue;
      }
      auto it = std::find_if(stack.rbegin(), stack.rend(), [&](const Open& o) { return o.tag.name == tag->name; });
      if (it == stack.rend()) {
        warn("unmatched \\end{" + u32_to_utf8(tag->name) + "}", tag->begin);
        continue;
      }
      const std::size_t idx = static_cast<std::size_t>(stack.rend() - it) - 1;
      for (std::size_t k = idx + 1; k < stack.size(); ++k) {
        warn("unclosed \\begin{" + u32_to_utf8(stack[k].tag.name) + "}", stack[k].tag.begin);
      }
      regions.emplace_back(stack[idx].tag.begin, tag->end);
      stack.resize(idx);
    }
    for (const auto& o : stack) warn("unclosed \\begin{" + u32_to_utf8(o.tag.name) + "}", o.tag.begin);
    for (const auto& [b, e] : outermost(regions)) {
      take(b, e, ElementKind::table_html, latex_table_to_html(u32_to_utf8(U32V(s).substr(b, e - b))));
    }
  }

  static std::vector<std::pair<std::size_t, std::size_t>> outermost(std::vector<std::pair<std::size_t, std::size_t>> r) {
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first < b.first : a.second > b.second;
    });
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& x : r) {
      if (!out.empty() && x.first < out.back().second) continue;
      out.push_back(x);
    }
    return out;
  }

  static bool tag_at(U32V s, std::size_t p, U32V name) {
    if (!starts_with_ci(s, p, name)) return false;
    const std::size_t q = p + name.size();
    return q >= s.size() || s[q] == U'>' || s[q] == U'/' || is_space(s[q]);
  }

  void html_tables() {
    while (html_tables_pass()) {
    }
  }

  // Returns true when a crossing table was erased, so inner tables get
  // another chance.
  bool html_tables_pass() {
    std::vector<std::size_t> stack;
    std::vector<std::size_t> unmatched;
    std::vector<std::pair<std::size_t, std::size_t>> regions;
    std::size_t p = 0;
    while ((p = s.find(U'<', p)) != npos) {
      if (tag_at(s, p, U"<table")) {
        stack.push_back(p);
        p += 6;
        continue;
      }
      if (tag_at(s, p, U"</table")) {
        const std::size_t gt = s.find(U'>', p);
        const std::size_t end = gt == npos ? s.size() : gt + 1;
        if (stack.empty()) {
          unmatched.push_back(p);
        } else {
          regions.emplace_back(stack.back(), end);
          stack.pop_back();
        }
        p = end;
        continue;
      }
      ++p;
    }
    bool erased = false;
    for (const auto& [b, e] : outermost(regions)) {
      if (!is_free(b, e)) {
        warn("<table> crosses an extracted element", b);
        const std::size_t open_end = s.find(U'>', b);
        erase(b, open_end == npos ? b + 6 : open_end + 1);
        erase(s.rfind(U'<', e - 1), e);
        erased = true;
        continue;
      }
      take(b, e, ElementKind::table_html, u32_to_utf8(U32V(s).substr(b, e - b)));
    }
    if (!erased) {
      for (std::size_t o : unmatched) warn("unmatched </table>", o);
      for (std::size_t o : stack) warn("unclosed <table>", o);
    }
    return erased;
  }

  std::size_t line_start(std::size_t p) const {
    const std::size_t nl = p == 0 ? npos : s.rfind(U'\n', p - 1);
    return nl == npos ? 0 : nl + 1;
  }

  std::size_t line_end(std::size_t p) const {
    const std::size_t nl = s.find(U'\n', p);
    return nl == npos ? s.size() : nl;
  }

  // Opening ```math fence: at most three spaces of indentation and nothing
  // but whitespace after the info string.
  std::size_t next_math_fence(std::size_t from) const {
    std::size_t p = from;
    while ((p = s.find(U"```math", p)) != npos) {
      const std::size_t ls = line_start(p);
      const bool indent_ok = p - ls <= 3 && is_blank_line(U32V(s).substr(ls, p - ls));
      const std::size_t le = line_end(p);
      if (indent_ok && is_blank_line(U32V(s).substr(p + 7, le - p - 7))) return p;
      p += 7;
    }
    return npos;
  }

  // Closing ``` line after the fence opened at `open`; returns the offset of
  // the backticks.
  std::size_t math_fence_close(std::size_t open) const {
    std::size_t ls = line_end(open) + 1;
    while (ls < s.size()) {
      const std::size_t le = line_end(ls);
      const U32 line = trim(U32V(s).substr(ls, le - ls));
      if (line == U"```") return s.find(U"```", ls);
      ls = le + 1;
    }
    return npos;
  }

  std::size_t next_unescaped(U32V pat, std::size_t from) const {
    std::size_t p = from;
    while ((p = s.find(pat, p)) != npos) {
      if (p == 0 || s[p - 1] != U'\\') return p;
      ++p;
    }
    return npos;
  }

  void display_formulas() {
    bool dollars = true;
    bool brackets = true;
    bool fences = true;
    std::size_t pos = 0;
    // Cached candidates; a cache entry is refreshed once it falls behind pos.
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    bool fresh = false;
    while (true) {
      if (!fresh || (a != npos && a < pos)) a = dollars ? next_unescaped(U"$$", pos) : npos;
      if (!fresh || (b != npos && b < pos)) b = brackets ? next_unescaped(U"\\[", pos) : npos;
      if (!fresh || (c != npos && c < pos)) c = fences ? next_math_fence(pos) : npos;
      fresh = true;
      if (!dollars) a = npos;
      if (!brackets) b = npos;
      if (!fences) c = npos;
      const std::size_t first = std::min({a, b, c});
      if (first == npos) break;
      if (first == a) {
        const std::size_t close = next_unescaped(U"$$", a + 2);
        if (close == npos) {
          warn("unbalanced $$", a);
          dollars = false;
          continue;
        }
        if (!is_free(a, close + 2)) {
          warn("$$ crosses an extracted element", a);
          erase(a, a + 2);
          erase(close, close + 2);
          pos = a + 2;
          continue;
        }
        take(a, close + 2, ElementKind::display_formula, u32_to_utf8(trim(U32V(s).substr(a + 2, close - a - 2))));
        pos = close + 2;
      } else if (first == b) {
        const std::size_t close = next_unescaped(U"\\]", b + 2);
        if (close == npos) {
          warn("unbalanced \\[", b);
          brackets = false;
          continue;
        }
        if (!is_free(b, close + 2)) {
          warn("\\[ crosses an extracted element", b);
          erase(b, b + 2);
          erase(close, close + 2);
          pos = b + 2;
          continue;
        }
        take(b, close + 2, ElementKind::display_formula, u32_to_utf8(trim(U32V(s).substr(b + 2, close - b - 2))));
        pos = close + 2;
      } else {
        const std::size_t close = math_fence_close(c);
        if (close == npos) {
          warn("unclosed ```math fence", c);
          fences = false;
          continue;
        }
        if (!is_free(c, close + 3)) {
          warn("```math fence crosses an extracted element", c);
          erase(c, line_end(c));
          erase(close, close + 3);
          pos = c + 7;
          continue;
        }
        const std::size_t body = std::min(line_end(c) + 1, close);
        take(c, close + 3, ElementKind::display_formula, u32_to_utf8(trim(U32V(s).substr(body, close - body))));
        pos = close + 3;
      }
    }
  }

  void markdown_tables() {
    const auto lines = split_lines(s);
    auto text = [&](std::size_t k) { return U32V(s).substr(lines[k].begin, lines[k].end - lines[k].begin); };
    std::size_t i = 0;
    while (i + 1 < lines.size()) {
      const U32V head = text(i);
      if (!has_unescaped_pipe(head) || is_blank_line(head)) {
        ++i;
        continue;
      }
      const auto cols = delimiter_columns(text(i + 1));
      if (!cols || *cols != split_pipe_row(head).size()) {
        ++i;
        continue;
      }
      std::size_t j = i + 2;
      while (j < lines.size() && !is_blank_line(text(j)) && has_unescaped_pipe(text(j))) ++j;
      std::size_t b = lines[i].begin;
      std::size_t e = lines[j - 1].end;
      while (b < e && is_space(s[b])) ++b;
      while (e > b && is_space(s[e - 1])) --e;
      if (!is_free(b, e)) {
        warn("markdown table crosses an extracted element", b);
        erase(lines[i + 1].begin, lines[i + 1].end);
        i += 2;
        continue;
      }
      std::string html = markdown_table_to_html(u32_to_utf8(U32V(s).substr(b, e - b)));
      take(b, e, ElementKind::table_html, std::move(html));
      i = j;
    }
  }

  struct Fence {
    char32_t ch;
    std::size_t len;
    std::size_t at;  // offset of the first fence character
  };

  std::optional<Fence> fence_on(const Line& ln) const {
    std::size_t p = ln.begin;
    while (p < ln.end && p - ln.begin < 3 && s[p] == U' ') ++p;
    if (p >= ln.end || (s[p] != U'`' && s[p] != U'~')) return std::nullopt;
    const char32_t ch = s[p];
    std::size_t q = p;
    while (q < ln.end && s[q] == ch) ++q;
    if (q - p < 3) return std::nullopt;
    if (ch == U'`' && U32V(s).substr(q, ln.end - q).find(U'`') != npos) return std::nullopt;
    return Fence{ch, q - p, p};
  }

  void code_blocks() {
    const auto lines = split_lines(s);
    bool backticks = true;
    bool tildes = true;
    std::size_t i = 0;
    while (i < lines.size()) {
      const auto open = fence_on(lines[i]);
      if (!open || (open->ch == U'`' ? !backticks : !tildes)) {
        ++i;
        continue;
      }
      std::optional<std::size_t> close;
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        const auto f = fence_on(lines[j]);
        if (f && f->ch == open->ch && f->len >= open->len &&
            is_blank_line(U32V(s).substr(f->at + f->len, lines[j].end - f->at - f->len))) {
          close = j;
          break;
        }
      }
      if (!close) {
        warn("unclosed code fence", open->at);
        (open->ch == U'`' ? backticks : tildes) = false;
        ++i;
        continue;
      }
      if (!is_free(lines[i].begin, lines[*close].end)) {
        warn("code fence crosses an extracted element", open->at);
        erase(open->at, lines[i].end);
        erase(lines[*close].begin, lines[*close].end);
        i = *close + 1;
        continue;
      }
      U32 body;
      for (std::size_t k = i + 1; k < *close; ++k) {
        if (k > i + 1) body.push_back(U'\n');
        body.append(U32V(s).substr(lines[k].begin, lines[k].end - lines[k].begin));
      }
      std::size_t e = lines[*close].end;
      while (e > open->at && is_space(s[e - 1])) --e;
      take(open->at, e, ElementKind::code_block, normalize_text(u32_to_utf8(body)));
      i = *close + 1;
    }
  }

  void paragraphs() {
    for (const auto& [pb, pe] : paragraph_ranges(s)) {
      // Split around extracted regions that sit inside the paragraph.
      std::size_t k = pb;
      while (k < pe) {
        while (k < pe && (taken[k] || is_space(s[k]))) ++k;
        std::size_t e = k;
        while (e < pe && !taken[e]) ++e;
        std::size_t t = e;
        while (t > k && is_space(s[t - 1])) --t;
        if (k < t) {
          std::string content = normalize_text(u32_to_utf8(U32V(s).substr(k, t - k)));
          if (!content.empty()) elements.push_back({ElementKind::text_paragraph, std::move(content), {k, t}});
        }
        k = e;
      }
    }
  }
};

std::size_t match_image(U32V s, std::size_t i) {
  // s[i..] starts with "![": returns the end of the image reference or npos.
  int depth = 0;
  std::size_t j = i + 1;
  for (; j < s.size(); ++j) {
    if (s[j] == U'\\') {
      ++j;
      continue;
    }
    if (s[j] == U'[') ++depth;
    if (s[j] == U']' && --depth == 0) break;
  }
  if (j >= s.size() || j + 1 >= s.size() || s[j + 1] != U'(') return npos;
  depth = 0;
  for (std::size_t k = j + 1; k < s.size(); ++k) {
    if (s[k] == U'\n' && k + 1 < s.size() && s[k + 1] == U'\n') return npos;
    if (s[k] == U'(') ++depth;
    if (s[k] == U')' && --depth == 0) return k + 1;
  }
  return npos;
}

}  // namespace

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::text_paragraph:
      return "text_paragraph";
    case ElementKind::display_formula:
      return "display_formula";
    case ElementKind::table_html:
      return "table_html";
    case ElementKind::code_block:
      return "code_block";
  }
  return "unknown";
}

std::string preprocess(std::string_view markdown, std::size_t repeat_cap) {
  U32 s = utf8_to_u32(markdown);

  // Leading ```markdown / ```md wrapper and its closing fence.
  {
    std::size_t p = 0;
    while (p < s.size() && is_space(s[p])) ++p;
    for (U32V tag : {U32V(U"```markdown"), U32V(U"```md")}) {
      if (!starts_with_ci(s, p, tag)) continue;
      std::size_t le = s.find(U'\n', p);
      if (le == npos) le = s.size();
      if (!is_blank_line(U32V(s).substr(p + tag.size(), le - p - tag.size()))) continue;
      s.erase(0, std::min(le + 1, s.size()));
      std::size_t e = s.size();
      while (e > 0 && is_space(s[e - 1])) --e;
      if (e >= 3 && U32V(s).substr(e - 3, 3) == U"```") {
        std::size_t ls = e - 3;
        while (ls > 0 && (s[ls - 1] == U' ' || s[ls - 1] == U'\t')) --ls;
        if (ls == 0 || s[ls - 1] == U'\n') s.erase(ls == 0 ? 0 : ls - 1);
      }
      break;
    }
  }

  // Images.
  {
    U32 out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
      if (s[i] == U'!' && i + 1 < s.size() && s[i + 1] == U'[') {
        const std::size_t e = match_image(s, i);
        if (e != npos) {
          i = e;
          continue;
        }
      }
      if (s[i] == U'<' && starts_with_ci(s, i, U"<img") && i + 4 < s.size() &&
          (is_space(s[i + 4]) || s[i + 4] == U'>' || s[i + 4] == U'/')) {
        const std::size_t gt = s.find(U'>', i);
        if (gt != npos) {
          i = gt + 1;
          continue;
        }
      }
      out.push_back(s[i++]);
    }
    s = std::move(out);
  }

  // Repeated characters.
  if (repeat_cap > 0) {
    U32 out;
    out.reserve(s.size());
    std::size_t run = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      run = (i > 0 && s[i] == s[i - 1]) ? run + 1 : 1;
      if (run <= repeat_cap) out.push_back(s[i]);
    }
    s = std::move(out);
  }
  return u32_to_utf8(s);
}

ExtractedDoc extract_elements(std::string_view markdown) {
  Extractor ex(utf8_to_u32(markdown));
  ex.latex_tables();
  ex.html_tables();
  ex.display_formulas();
  ex.markdown_tables();
  ex.code_blocks();
  ex.paragraphs();

  ExtractedDoc doc;
  std::stable_sort(ex.elements.begin(), ex.elements.end(),
                   [](const ExtractedElement& a, const ExtractedElement& b) { return a.span.start < b.span.start; });
  for (const auto& e : ex.elements) {
    switch (e.kind) {
      case ElementKind::text_paragraph:
        ++doc.residual_stats.text_paragraph;
        break;
      case ElementKind::display_formula:
        ++doc.residual_stats.display_formula;
        break;
      case ElementKind::table_html:
        ++doc.residual_stats.table_html;
        break;
      case ElementKind::code_block:
        ++doc.residual_stats.code_block;
        break;
    }
  }
  doc.elements = std::move(ex.elements);
  doc.warnings = std::move(ex.warnings);
  doc.residual = u32_to_utf8(ex.s);
  return doc;
}

std::vector<std::string> split_paragraphs(std::string_view residual) {
  const U32 s = utf8_to_u32(residual);
  std::vector<std::string> out;
  for (const auto& [b, e] : paragraph_ranges(s)) out.push_back(u32_to_utf8(U32V(s).substr(b, e - b)));
  return out;
}

std::string markdown_table_to_html(std::string_view md_table) {
  const U32 s = utf8_to_u32(md_table);
  std::vector<U32V> rows;
  for (const auto& ln : split_lines(s)) {
    const U32V line = U32V(s).substr(ln.begin, ln.end - ln.begin);
    if (!is_blank_line(line)) rows.push_back(line);
  }
  if (rows.size() < 2) throw InputError("markdown table: line 2: missing delimiter row");
  const auto header = split_pipe_row(rows[0]);
  const auto cols = delimiter_columns(rows[1]);
  if (!cols) throw InputError("markdown table: line 2: malformed delimiter row '" + u32_to_utf8(trim(rows[1])) + "'");
  const std::size_t width = header.size();
  std::string html = "<table>";
  auto emit = [&](std::vector<U32> cells) {
    cells.resize(width);
    html += "<tr>";
    for (const auto& c : cells) html += "<td>" + html_escape(c) + "</td>";
    html += "</tr>";
  };
  emit(header);
  for (std::size_t r = 2; r < rows.size(); ++r) emit(split_pipe_row(rows[r]));
  return html + "</table>";
}

std::string latex_table_to_html(std::string_view latex) {
  const U32 s = utf8_to_u32(latex);
  std::size_t from = 0;
  while (auto tag = next_env_tag(s, from)) {
    from = tag->end;
    if (!tag->opening || !is_tabular_env(tag->name)) continue;
    std::size_t i = tag->end;
    if (tag->name == U"tabular*" || tag->name == U"tabularx" || tag->name == U"tabulary") read_arg(s, i);
    skip_optional(s, i, U'[', U']');
    skip_spaces(s, i);
    if (i < s.size() && s[i] == U'{') read_arg(s, i);  // column specification
    // Matching \end with nesting of the same environment.
    int depth = 1;
    std::size_t scan = i;
    std::size_t body_end = s.size();
    while (auto t = next_env_tag(s, scan)) {
      scan = t->end;
      if (t->name != tag->name) continue;
      depth += t->opening ? 1 : -1;
      if (depth == 0) {
        body_end = t->begin;
        break;
      }
    }
    return latex_body_to_html(U32V(s).substr(i, body_end - std::min(i, body_end)));
  }
  return "<table></table>";
}

std::string inline_formula_to_unicode(std::string_view paragraph, std::vector<std::string>* warnings) {
  const U32 s = utf8_to_u32(paragraph);
  U32 out;
  out.reserve(s.size());
  bool dollars = true;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto warn = [&](const std::string& msg, std::size_t at) {
    if (warnings) warnings->push_back(msg + " at offset " + std::to_string(at));
  };
  while (i < n) {
    const char32_t c = s[i];
    if (c == U'\\' && i + 1 < n) {
      if (s[i + 1] == U'(') {
        const std::size_t close = s.find(U"\\)", i + 2);
        if (close != npos) {
          out += convert_latex(U32V(s).substr(i + 2, close - i - 2), false);
          i = close + 2;
          continue;
        }
        warn("unbalanced \\(", i);
      }
      out.push_back(c);
      out.push_back(s[i + 1]);
      i += 2;
      continue;
    }
    if (c == U'$') {
      if (i + 1 < n && s[i + 1] == U'$') {
        out += U"$$";
        i += 2;
        continue;
      }
      std::size_t close = npos;
      if (dollars) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (s[j] == U'\\') {
            ++j;
            continue;
          }
          if (s[j] == U'$') {
            close = j;
            break;
          }
        }
      }
      if (close == npos) {
        if (dollars) warn("unbalanced $", i);
        dollars = false;
        out.push_back(c);
        ++i;
        continue;
      }
      out += convert_latex(U32V(s).substr(i + 1, close - i - 1), false);
      i = close + 1;
      continue;
    }
    out.push_back(c);
    ++i;
  }
  return u32_to_utf8(out);
}

std::string normalize_text(std::string_view text) {
  U32 s = trim(utf8_to_u32(text));
  std::size_t hashes = 0;
  while (hashes < s.size() && hashes < 7 && s[hashes] == U'#') ++hashes;
  if (hashes >= 1 && hashes <= 6 && hashes < s.size() && is_space(s[hashes])) s.erase(0, hashes + 1);
  const std::string converted = inline_formula_to_unicode(u32_to_utf8(s));
  return u32_to_utf8(collapse_whitespace(utf8_to_u32(converted)));
}

}  // namespace docparse_eval
