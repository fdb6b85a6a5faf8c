#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "docparse_eval/errors.hpp"
#include "docparse_eval/reporter.hpp"

using namespace docparse_eval;

namespace {

PageScores page(const std::string& id, PdfType type, std::optional<double> text) {
  PageScores p;
  p.page_id = id;
  p.attributes.pdf_type = type;
  p.text_edit = text;
  return p;
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Reporter, GroupMeanAndPopulationVariance) {
  const std::vector<PageScores> pages{page("a", PdfType::book, 0.1), page("b", PdfType::book, 0.3),
                                      page("c", PdfType::notes, 0.5)};
  const GroupTable t = aggregate(pages, parse_selector("pdf_type"));
  ASSERT_EQ(t.groups.size(), 2u);
  EXPECT_EQ(t.groups[0].key, "book");
  EXPECT_EQ(t.groups[0].count, 2u);
  EXPECT_DOUBLE_EQ(t.groups[0].mean, 0.2);
  EXPECT_NEAR(t.groups[0].variance, 0.01, 1e-15);
  EXPECT_EQ(t.groups[1].key, "notes");
  EXPECT_EQ(t.groups[1].variance, 0.0);
}

TEST(Reporter, PagesWithoutTheMetricAreLeftOut) {
  const std::vector<PageScores> pages{page("a", PdfType::book, 0.1), page("b", PdfType::book, std::nullopt)};
  const GroupTable t = aggregate(pages, parse_selector("pdf_type:text_edit"));
  ASSERT_EQ(t.groups.size(), 1u);
  EXPECT_EQ(t.groups[0].count, 1u);
}

TEST(Reporter, WeightedRecombinationEqualsUngroupedMean) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int round = 0; round < 50; ++round) {
    std::vector<PageScores> pages;
    double sum = 0.0;
    for (int i = 0; i < 40; ++i) {
      const auto type = all_values<PdfType>()[rng() % all_values<PdfType>().size()];
      PageScores p = page("p" + std::to_string(i), type, u(rng));
      p.attributes.language = all_values<Language>()[rng() % 3];
      sum += *p.text_edit;
      pages.push_back(p);
    }
    for (const char* attr : {"pdf_type", "language", "layout_type"}) {
      const GroupTable t = aggregate(pages, parse_selector(attr));
      double weighted = 0.0;
      std::size_t n = 0;
      for (const auto& g : t.groups) {
        weighted += g.mean * static_cast<double>(g.count);
        n += g.count;
      }
      ASSERT_EQ(n, pages.size());
      EXPECT_NEAR(weighted / static_cast<double>(n), sum / 40.0, 1e-9);
    }
  }
}

TEST(Reporter, SpecialIssuesCountInEveryGroupAndNone) {
  PageScores a = page("a", PdfType::book, 0.2);
  a.attributes.special_issues = {SpecialIssue::watermark, SpecialIssue::fuzzy_scan};
  PageScores b = page("b", PdfType::book, 0.4);
  const GroupTable t = aggregate({a, b}, parse_selector("special_issues"));
  ASSERT_EQ(t.groups.size(), 3u);
  EXPECT_EQ(t.groups[0].key, "fuzzy_scan");
  EXPECT_EQ(t.groups[1].key, "watermark");
  EXPECT_EQ(t.groups[2].key, "none");
  EXPECT_DOUBLE_EQ(t.groups[2].mean, 0.4);
}

TEST(Reporter, BlockLevelGroupsUseEntries) {
  PageScores p = page("a", PdfType::book, std::nullopt);
  for (double edit : {0.0, 0.5, 1.0}) {
    ScoreEntry e;
    e.component = Component::table;
    e.edit = edit;
    e.teds = 1.0 - edit;
    BlockRef ref{"t", Category::table, std::nullopt, TableAttributes{}};
    ref.table_attributes->merge_cell = edit > 0.7;
    e.blocks.push_back(ref);
    p.entries.push_back(e);
  }
  const GroupTable t = aggregate({p}, parse_selector("table_merge_cell"));
  ASSERT_EQ(t.groups.size(), 2u);
  EXPECT_EQ(t.groups[0].key, "true");
  EXPECT_DOUBLE_EQ(t.groups[0].mean, 0.0);
  EXPECT_EQ(t.groups[1].key, "false");
  EXPECT_DOUBLE_EQ(t.groups[1].mean, 0.75);
}

TEST(Reporter, SelectorParsing) {
  const Selector s = parse_selector("table_frame");
  EXPECT_TRUE(s.block_level);
  EXPECT_EQ(s.metric, Metric::table_teds);
  EXPECT_EQ(parse_selector("layout_type:read_order_edit").label(), "layout_type:read_order_edit");
  EXPECT_THROW(parse_selector("colour"), InputError);
  EXPECT_THROW(parse_selector("pdf_type:speed"), InputError);
  EXPECT_THROW(parse_selector("text_language:table_teds"), InputError);
}

TEST(Reporter, OverallEditIsMeanOfComponents) {
  PageScores p = page("a", PdfType::book, 0.2);
  p.formula_edit = 0.4;
  p.table_edit = 0.2;
  p.table_teds = 0.8;
  p.read_order_edit = 0.2;
  const OverallRow r = overall({p}, "all", OverallMode::component_mean);
  EXPECT_DOUBLE_EQ(*r.overall_edit, 0.25);
  EXPECT_TRUE(r.missing.empty());
}

TEST(Reporter, MissingComponentIsFlagged) {
  PageScores p = page("a", PdfType::book, 0.2);
  p.read_order_edit = 0.4;
  const OverallRow r = overall({p}, "all", OverallMode::component_mean);
  EXPECT_DOUBLE_EQ(*r.overall_edit, 0.3);
  EXPECT_EQ(r.missing, (std::vector<std::string>{"formula_edit", "table_edit"}));
  EXPECT_FALSE(r.formula_edit.has_value());

  EvalReport rep{"end2end", {p}, overall_rows({p}, OverallMode::component_mean), {}, std::nullopt};
  EXPECT_NE(render(rep, Format::md).find("formula_edit"), std::string::npos);
}

TEST(Reporter, PairPooledWeighsEntries) {
  PageScores a = page("a", PdfType::book, std::nullopt);
  for (double edit : {0.0, 0.0, 0.0}) a.entries.push_back(ScoreEntry{Component::text, {}, true, edit, {}, {}, {}});
  PageScores b = page("b", PdfType::book, std::nullopt);
  b.entries.push_back(ScoreEntry{Component::text, {}, false, 1.0, {}, {}, {}});
  summarize_entries(a);
  summarize_entries(b);
  EXPECT_DOUBLE_EQ(*overall({a, b}, "all", OverallMode::component_mean).text_edit, 0.5);
  EXPECT_DOUBLE_EQ(*overall({a, b}, "all", OverallMode::pair_pooled).text_edit, 0.25);
}

TEST(Reporter, LanguageSlicesThenAll) {
  PageScores a = page("a", PdfType::book, 0.1);
  PageScores b = page("b", PdfType::book, 0.3);
  b.attributes.language = Language::zh;
  const auto rows = overall_rows({a, b}, OverallMode::component_mean);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].slice, "en");
  EXPECT_EQ(rows[1].slice, "zh");
  EXPECT_EQ(rows[2].slice, "all");
  EXPECT_EQ(rows[2].pages, 2u);
}

TEST(Reporter, EmptyReportCsvIsHeaderOnly) {
  const EvalReport rep{"end2end", {}, {}, {}, std::nullopt};
  const std::string csv = render(rep, Format::csv);
  EXPECT_EQ(line_count(csv), 1u);
  EXPECT_EQ(csv.rfind("kind,attr,key,count,", 0), 0u);
}

TEST(Reporter, RenderingIsDeterministic) {
  std::vector<PageScores> pages;
  for (int i = 0; i < 10; ++i) pages.push_back(page("p" + std::to_string(i), PdfType::book, i / 10.0));
  const EvalReport rep{"ocr", pages, overall_rows(pages, OverallMode::component_mean),
                       {aggregate(pages, parse_selector("pdf_type"))}, std::nullopt};
  for (Format f : {Format::md, Format::csv, Format::json}) EXPECT_EQ(render(rep, f), render(rep, f));
  EXPECT_NE(render(rep, Format::md).find("| book |"), std::string::npos);
}

TEST(Reporter, FixedFormatting) {
  EXPECT_EQ(format_fixed(0.12345, 3), "0.123");
  EXPECT_EQ(format_fixed(-0.0001, 3), "0.000");
  EXPECT_EQ(format_fixed(100.0, 1), "100.0");
  EXPECT_EQ(*format_from_string("csv"), Format::csv);
  EXPECT_FALSE(format_from_string("xml"));
}
