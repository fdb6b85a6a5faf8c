#include <gtest/gtest.h>

#include <random>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/md_extract.hpp"
#include "docparse_eval/unicode.hpp"

using namespace docparse_eval;

namespace {

std::vector<ElementKind> kinds(const ExtractedDoc& d) {
  std::vector<ElementKind> out;
  for (const auto& e : d.elements) out.push_back(e.kind);
  return out;
}

void expect_well_formed(const ExtractedDoc& d, std::size_t length) {
  std::size_t prev_end = 0;
  for (const auto& e : d.elements) {
    EXPECT_LT(e.span.start, e.span.end);
    EXPECT_LE(e.span.end, length);
    EXPECT_GE(e.span.start, prev_end) << "spans overlap or are unsorted";
    prev_end = e.span.end;
  }
  EXPECT_EQ(utf8_length(d.residual), length);
}

std::size_t structured(const ExtractedDoc& d) {
  std::size_t n = 0;
  for (const auto& e : d.elements) n += e.kind != ElementKind::text_paragraph;
  return n;
}

}  // namespace

TEST(Preprocess, RemovesImages) { EXPECT_EQ(preprocess("![fig](a.png) hello"), " hello"); }

TEST(Preprocess, StripsMarkdownWrapper) { EXPECT_EQ(preprocess("```markdown\nbody\n```"), "body"); }

TEST(Preprocess, CapsRepeatedCharacters) {
  EXPECT_EQ(preprocess(std::string(600, '-')), std::string(100, '-'));
  EXPECT_EQ(preprocess(std::string(600, '-'), 10), std::string(10, '-'));
  EXPECT_EQ(preprocess(std::string(600, '-'), 0), std::string(600, '-'));
  EXPECT_EQ(preprocess("aaab", 2), "aab");
}

TEST(Preprocess, CapCountsCodePointsNotBytes) {
  std::string s;
  for (int i = 0; i < 150; ++i) s += "中";
  EXPECT_EQ(utf8_length(preprocess(s)), 100u);
}

TEST(Preprocess, RemovesHtmlImages) { EXPECT_EQ(preprocess("a<img src=\"x.png\">b"), "ab"); }

TEST(Extract, FormulaBetweenParagraphs) {
  const ExtractedDoc d = extract_elements("intro\n\n$$E=mc^2$$\n\noutro");
  ASSERT_EQ(d.elements.size(), 3u);
  EXPECT_EQ(kinds(d), (std::vector{ElementKind::text_paragraph, ElementKind::display_formula,
                                   ElementKind::text_paragraph}));
  EXPECT_EQ(d.elements[0].content, "intro");
  EXPECT_EQ(d.elements[1].content, "E=mc^2");
  EXPECT_EQ(d.elements[2].content, "outro");
  expect_well_formed(d, 24);
}

TEST(Extract, PipeTableBecomesHtml) {
  const ExtractedDoc d = extract_elements("|a|b|\n|-|-|\n|1|2|");
  ASSERT_EQ(d.elements.size(), 1u);
  EXPECT_EQ(d.elements[0].kind, ElementKind::table_html);
  EXPECT_EQ(d.elements[0].content, "<table><tr><td>a</td><td>b</td></tr><tr><td>1</td><td>2</td></tr></table>");
}

TEST(Extract, LatexTableBeforeFormula) {
  const std::string md = "\\begin{table}\\begin{tabular}{cc}a & b\\\\\\end{tabular}\\end{table}$$x$$";
  const ExtractedDoc d = extract_elements(md);
  ASSERT_EQ(d.elements.size(), 2u);
  EXPECT_EQ(d.elements[0].kind, ElementKind::table_html);
  EXPECT_EQ(d.elements[1].kind, ElementKind::display_formula);
  EXPECT_EQ(d.elements[1].content, "x");
  EXPECT_LE(d.elements[0].span.end, d.elements[1].span.start);
}

TEST(Extract, HtmlTableKeepsMarkup) {
  const ExtractedDoc d = extract_elements("before\n\n<table><tr><td>1</td></tr></table>\n\nafter");
  ASSERT_EQ(d.elements.size(), 3u);
  EXPECT_EQ(d.elements[1].kind, ElementKind::table_html);
  EXPECT_EQ(d.elements[1].content, "<table><tr><td>1</td></tr></table>");
}

TEST(Extract, OtherDisplayDelimiters) {
  const ExtractedDoc a = extract_elements("\\[ a+b \\]");
  ASSERT_EQ(a.elements.size(), 1u);
  EXPECT_EQ(a.elements[0].kind, ElementKind::display_formula);
  EXPECT_EQ(a.elements[0].content, "a+b");
  const ExtractedDoc b = extract_elements("```math\nx^2\n```");
  ASSERT_EQ(b.elements.size(), 1u);
  EXPECT_EQ(b.elements[0].kind, ElementKind::display_formula);
  EXPECT_EQ(b.elements[0].content, "x^2");
}

TEST(Extract, CodeBlock) {
  const ExtractedDoc d = extract_elements("text\n\n```python\nprint(1)\n```\n\nmore");
  ASSERT_EQ(d.elements.size(), 3u);
  EXPECT_EQ(d.elements[1].kind, ElementKind::code_block);
  EXPECT_EQ(d.elements[1].content, "print(1)");
}

TEST(Extract, UnbalancedFormulaWarnsAndStaysText) {
  const ExtractedDoc d = extract_elements("a $$ b\n\nc");
  EXPECT_FALSE(d.warnings.empty());
  for (const auto& e : d.elements) EXPECT_EQ(e.kind, ElementKind::text_paragraph);
}

TEST(Extract, UnbalancedFenceWarns) {
  const ExtractedDoc d = extract_elements("```\ncode without end\n\ntext");
  EXPECT_FALSE(d.warnings.empty());
  EXPECT_EQ(structured(d), 0u);
}

TEST(Extract, ResidualKeepsLengthAndHidesDelimiters) {
  const std::string md = "p1\n\n$$x$$\n\n|a|\n|-|\n|1|\n\n```\nc\n```\n\n<table><tr><td>z</td></tr></table>";
  const ExtractedDoc d = extract_elements(md);
  EXPECT_EQ(utf8_length(d.residual), utf8_length(md));
  EXPECT_EQ(d.residual.find("$$"), std::string::npos);
  EXPECT_EQ(d.residual.find("```"), std::string::npos);
  EXPECT_EQ(d.residual.find("<table"), std::string::npos);
  EXPECT_EQ(structured(extract_elements(d.residual)), 0u);
  EXPECT_EQ(d.residual_stats.display_formula, 1u);
  EXPECT_EQ(d.residual_stats.table_html, 2u);
  EXPECT_EQ(d.residual_stats.code_block, 1u);
}

TEST(SplitParagraphs, Rules) {
  EXPECT_EQ(split_paragraphs("a\n\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_paragraphs("a\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(split_paragraphs("a\n\n\n\nb"), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(split_paragraphs("  \n \n").empty());
}

TEST(MarkdownTable, Conversions) {
  EXPECT_EQ(markdown_table_to_html("|a|\n|-|\n|1|"), "<table><tr><td>a</td></tr><tr><td>1</td></tr></table>");
  EXPECT_EQ(markdown_table_to_html("|a|b|\n|-|-|"), "<table><tr><td>a</td><td>b</td></tr></table>");
  EXPECT_EQ(markdown_table_to_html("|a|b|\n|-|-|\n|1|"),
            "<table><tr><td>a</td><td>b</td></tr><tr><td>1</td><td></td></tr></table>");
  EXPECT_EQ(markdown_table_to_html("| x \\| y | z |\n|:--|--:|"), "<table><tr><td>x | y</td><td>z</td></tr></table>");
}

TEST(MarkdownTable, MalformedDelimiterNamesTheLine) {
  try {
    markdown_table_to_html("|a|b|\n|x|y|");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LatexTable, MulticolumnAndMultirow) {
  const std::string html = latex_table_to_html(
      "\\begin{tabular}{ccc}\\multicolumn{2}{c}{ab} & c \\\\ \\multirow{2}{*}{d} & e & f \\\\ & g & h\\end{tabular}");
  EXPECT_NE(html.find("colspan=\"2\""), std::string::npos) << html;
  EXPECT_NE(html.find("rowspan=\"2\""), std::string::npos) << html;
}

TEST(InlineFormula, MappingTable) {
  EXPECT_EQ(inline_formula_to_unicode("rate $\\alpha$ rises"), "rate α rises");
  EXPECT_EQ(inline_formula_to_unicode("area $x^2$"), "area x²");
  EXPECT_EQ(inline_formula_to_unicode("no math here"), "no math here");
  EXPECT_EQ(inline_formula_to_unicode("\\(a \\leq b\\)"), "a≤b");
  EXPECT_EQ(inline_formula_to_unicode("$x_1$"), "x₁");
}

TEST(InlineFormula, UnbalancedDollarWarns) {
  std::vector<std::string> warnings;
  EXPECT_EQ(inline_formula_to_unicode("costs $5 today", &warnings), "costs $5 today");
  EXPECT_FALSE(warnings.empty());
}

TEST(InlineFormula, UnknownCommandsKeepArguments) {
  EXPECT_EQ(inline_formula_to_unicode("$\\mathbf{v}$"), "v");
  EXPECT_EQ(inline_formula_to_unicode("$\\frac{a}{b}$"), "a/b");
}

TEST(NormalizeText, HeadingAndWhitespace) {
  EXPECT_EQ(normalize_text("## Title  here\n"), "Title here");
  EXPECT_EQ(normalize_text("a\n b\t c"), "a b c");
}

TEST(ExtractFuzz, InvariantsOnRandomMarkdown) {
  const std::vector<std::string> pieces = {"$$", "$", "\\[", "\\]", "```", "~~~", "```math\n", "|", "|-|", "\n",
                                           "\n\n", "<table>", "</table>", "<tr>", "<td>", "</td>", "x", "中",
                                           "\\begin{tabular}", "\\end{tabular}", "&", "\\\\", "# ", " ", "é"};
  std::mt19937 rng(7);
  for (int round = 0; round < 400; ++round) {
    std::string md;
    const int n = static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) md += pieces[rng() % pieces.size()];
    const std::string pre = preprocess(md);
    const ExtractedDoc d = extract_elements(pre);
    expect_well_formed(d, utf8_length(pre));
    EXPECT_EQ(structured(extract_elements(d.residual)), 0u) << md;
    const ExtractedDoc again = extract_elements(pre);
    ASSERT_EQ(again.elements.size(), d.elements.size());
    for (std::size_t i = 0; i < d.elements.size(); ++i) EXPECT_EQ(again.elements[i].content, d.elements[i].content);
  }
}

TEST(InlineFormulaFuzz, Idempotent) {
  const std::vector<std::string> pieces = {"$", "\\(", "\\)", "x", "^", "_", "2", "{", "}", "\\alpha", "\\frac",
                                           " ", "\\leq", "a", "\\$", "\\mathbf", "中"};
  std::mt19937 rng(11);
  for (int round = 0; round < 500; ++round) {
    std::string s;
    const int n = static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) s += pieces[rng() % pieces.size()];
    const std::string once = inline_formula_to_unicode(s);
    EXPECT_EQ(inline_formula_to_unicode(once), once) << s;
  }
}
