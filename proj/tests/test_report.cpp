// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "mhop/report.hpp"

using namespace mhop;
using namespace mhop::report;

namespace {

scoring::ScoreSummary summary(std::size_t correct, std::size_t total) {
  std::vector<EvalOutcome> os(total);
  for (std::size_t i = 0; i < correct; ++i) os[i].verdict = true;
  return scoring::accuracy(os, "x");
}

}  // namespace

TEST(CompareReport, BaseRowFromAccuracies) {
  auto row = make_row("Not fine-tuned (base)", 25.47, 25.93);
  EXPECT_EQ(signed_pct(row.abs_improvement_pp), "+0.46");
  EXPECT_EQ(signed_pct(row.rel_improvement_pct), "+1.81");
}

TEST(CompareReport, FineTunedRows) {
  auto two = make_row("LoRA epoch 2", 88.89, 89.32);
  EXPECT_EQ(signed_pct(two.abs_improvement_pp), "+0.43");
  EXPECT_EQ(signed_pct(two.rel_improvement_pct), "+0.48");
  auto ten = make_row("LoRA epoch 10", 90.33, 90.44);
  EXPECT_EQ(signed_pct(ten.abs_improvement_pp), "+0.11");
  EXPECT_EQ(signed_pct(ten.rel_improvement_pct), "+0.12");
}

TEST(CompareReport, IdenticalAndZeroBaseline) {
  auto s = summary(3, 4);
  auto row = compare_report(s, s, "same");
  EXPECT_EQ(row.abs_improvement_pp, 0.0);
  EXPECT_EQ(row.rel_improvement_pct, 0.0);
  auto zero = compare_report(summary(0, 5), summary(5, 5), "zero");
  EXPECT_DOUBLE_EQ(zero.abs_improvement_pp, 100.0);
  EXPECT_FALSE(zero.rel_improvement_pct);
  EXPECT_EQ(signed_pct(zero.rel_improvement_pct), "n/a");
  EXPECT_THROW(compare_report(summary(0, 0), s, "empty"), Error);
}

TEST(CompareReport, RelativeMatchesDefinition) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.5, 100.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng);
    double b = u(rng);
    auto row = make_row("r", a, b);
    EXPECT_NEAR(*row.rel_improvement_pct * a, (b - a) * 100.0, 1e-9);
  }
}

TEST(Render, TextTableHasNoteAndRows) {
  std::vector<ReportRow> rows{make_row("base", 25.47, 25.93), make_row("epoch 2", 88.89, 89.32)};
  auto text = render_text(rows);
  EXPECT_NE(text.find("25.47"), std::string::npos);
  EXPECT_NE(text.find("89.32"), std::string::npos);
  EXPECT_NE(text.find(kImprovementNote), std::string::npos);
  auto md = render_markdown(rows);
  EXPECT_NE(md.find("| base | 25.47 | 25.93 | +0.46 | +1.81 |"), std::string::npos);
  EXPECT_EQ(render_text(rows), text);
}

TEST(Render, Formatting) {
  EXPECT_EQ(pct(50.0), "50.00");
  EXPECT_EQ(signed_pct(-0.456), "-0.46");
  EXPECT_EQ(signed_pct(0.0), "+0.00");
}

TEST(PlotData, ThreeRowsAndRoundTrip) {
  std::vector<ReportRow> rows{make_row("base", 25.47, 25.93), make_row("epoch 2", 88.89, 89.32),
                              make_row("epoch, 10", 90.33, 90.44)};
  auto csv = plot_data_csv(rows);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(parse_plot_data(csv), rows);
  std::vector<ReportRow> with_zero{make_row("zero", 0.0, 10.0)};
  EXPECT_EQ(plot_data_csv(with_zero), std::string(kPlotHeader) + "\nzero,0,10,10,\n");
  EXPECT_EQ(parse_plot_data(plot_data_csv(with_zero)), with_zero);
}

TEST(PlotData, EmptyIsHeaderOnly) {
  EXPECT_EQ(plot_data_csv({}), std::string(kPlotHeader) + "\n");
  EXPECT_TRUE(parse_plot_data(plot_data_csv({})).empty());
  EXPECT_THROW(parse_plot_data("a,b\n"), Error);
}
