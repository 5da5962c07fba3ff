// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mhop/scoring.hpp"
#include "synthetic.hpp"

using namespace mhop;
using scoring::is_correct;
using scoring::normalize;

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize("  Rishi  Sunak. "), "rishi sunak");
  EXPECT_EQ(normalize("rishi sunak"), "rishi sunak");
  EXPECT_EQ(normalize("The United Kingdom"), "united kingdom");
  EXPECT_EQ(normalize("an Apple"), "apple");
  EXPECT_EQ(normalize("A"), "a");  // lone letter is not an article
  EXPECT_EQ(normalize("\"Paris!\""), "paris");
  EXPECT_EQ(normalize(""), "");
}

TEST(Normalize, UnicodeComposedAndFolded) {
  EXPECT_EQ(normalize("Jos\xC3\xA9"), normalize("JOSE\xCC\x81"));  // é vs E + combining acute
  EXPECT_EQ(normalize("Stra\xC3\x9F" "e"), "strasse");
  EXPECT_EQ(normalize("M\xC3\xBCnchen\xC2\xA0 Bayern"), "m\xC3\xBCnchen bayern");
}

TEST(Normalize, IdempotentOnRandomStrings) {
  std::mt19937_64 rng(1234);
  for (int i = 0; i < 5000; ++i) {
    auto s = synth::random_text(rng);
    auto once = normalize(s);
    ASSERT_EQ(normalize(once), once) << "input: " << s;
  }
}

TEST(IsCorrect, AliasExample) {
  std::vector<std::string> aliases{"Siddhartha Gautama"};
  EXPECT_TRUE(is_correct("Siddhartha Gautama", "Gautama Buddha", aliases));
}

TEST(IsCorrect, IdentityAndMiss) {
  EXPECT_TRUE(is_correct("Rishi Sunak", "Rishi Sunak", {}));
  EXPECT_FALSE(is_correct("UNKNOWN", "Rishi Sunak", {}));
}

TEST(IsCorrect, FullStringNotSubstring) {
  EXPECT_FALSE(is_correct("Boris Johnson and Rishi Sunak", "Rishi Sunak", {}));
}

TEST(IsCorrect, InvariantUnderNormalizationAndGoldAliasSwap) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 3000; ++i) {
    auto p = synth::random_text(rng);
    auto g = synth::random_text(rng);
    std::vector<std::string> aliases{synth::random_text(rng), rng() % 4 == 0 ? p : synth::random_text(rng)};
    const bool verdict = is_correct(p, g, aliases);
    ASSERT_EQ(is_correct(normalize(p), g, aliases), verdict);
    std::vector<std::string> swapped{g, aliases[1]};
    ASSERT_EQ(is_correct(p, aliases[0], swapped), verdict);
  }
}

TEST(Accuracy, Counting) {
  std::vector<EvalOutcome> os(4);
  os[0].verdict = true;
  os[2].verdict = true;
  os[3].verdict = true;
  auto s = scoring::accuracy(os, "x");
  EXPECT_EQ(s.total, 4u);
  EXPECT_EQ(s.correct, 3u);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.75);
  EXPECT_FALSE(s.empty);
}

TEST(Accuracy, EmptyIsFlagged) {
  auto s = scoring::accuracy({}, "x");
  EXPECT_TRUE(s.empty);
  EXPECT_EQ(s.total, 0u);
  EXPECT_EQ(s.accuracy, 0.0);
}

TEST(Accuracy, PlantedCountAndPermutationInvariance) {
  std::mt19937_64 rng(5);
  std::vector<EvalOutcome> os(1000);
  for (std::size_t i = 0; i < 743; ++i) os[i].verdict = true;
  std::shuffle(os.begin(), os.end(), rng);
  std::size_t linear = 0;
  for (const auto& o : os) linear += o.verdict ? 1 : 0;
  ASSERT_EQ(linear, 743u);
  auto s = scoring::accuracy(os);
  EXPECT_EQ(s.correct, linear);
  EXPECT_DOUBLE_EQ(s.accuracy, 0.743);
  std::shuffle(os.begin(), os.end(), rng);
  EXPECT_EQ(scoring::accuracy(os), s);
}
