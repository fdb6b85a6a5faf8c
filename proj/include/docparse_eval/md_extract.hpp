#pragma once

// Turns raw model markdown into ordered, typed elements with source spans.
//
// Extraction order is fixed: LaTeX tables, HTML tables, display formulas,
// markdown pipe tables, fenced code blocks. Each matched region is replaced
// by blanks of the same length, so every recorded span indexes the
// preprocessed input directly. Whatever is left becomes text paragraphs.
// Offsets count Unicode code points.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docparse_eval {

enum class ElementKind { text_paragraph, display_formula, table_html, code_block };

std::string_view to_string(ElementKind k);

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
};

struct ExtractedElement {
  ElementKind kind = ElementKind::text_paragraph;
  // Normalized text for paragraphs and code, trimmed LaTeX for formulas,
  // HTML for tables.
  std::string content;
  SourceSpan span;
};

struct KindCounts {
  std::size_t text_paragraph = 0;
  std::size_t display_formula = 0;
  std::size_t table_html = 0;
  std::size_t code_block = 0;
};

struct ExtractedDoc {
  std::vector<ExtractedElement> elements;  // ascending span.start
  KindCounts residual_stats;
  // The preprocessed input with every extracted table/formula/code region
  // blanked out. Same code-point length as the input.
  std::string residual;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kDefaultRepeatCap = 100;

// Removes images, a leading ```markdown wrapper fence, and truncates runs of
// one repeated character longer than `repeat_cap`.
std::string preprocess(std::string_view markdown, std::size_t repeat_cap = kDefaultRepeatCap);

ExtractedDoc extract_elements(std::string_view markdown);

// Splits on blank lines; when no blank line separates content, every
// non-empty line is its own paragraph. Whitespace-only fragments are dropped.
std::vector<std::string> split_paragraphs(std::string_view residual);

// Converts a GitHub-style pipe table. Header cells become ordinary <td>.
// Throws InputError on a missing or malformed delimiter row.
std::string markdown_table_to_html(std::string_view md_table);

// Converts the first tabular-like environment in `latex` into HTML rows with
// colspan/rowspan taken from \multicolumn and \multirow.
std::string latex_table_to_html(std::string_view latex);

// Rewrites $...$ and \(...\) regions to Unicode. Unbalanced delimiters are
// left as they are and reported through `warnings`.
std::string inline_formula_to_unicode(std::string_view paragraph, std::vector<std::string>* warnings = nullptr);

// Paragraph normalization applied identically to ground truth and
// predictions: a leading markdown heading marker is dropped, inline math is
// converted, whitespace runs collapse to single spaces.
std::string normalize_text(std::string_view text);

}  // namespace docparse_eval
