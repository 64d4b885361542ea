#include <cmath>

#include <gtest/gtest.h>

#include "watersearch/schemes.hpp"

namespace watersearch {
namespace {

WatermarkConfig Cfg(Scheme s, double gamma = 0.25, double delta = 4.0) {
  WatermarkConfig c;
  c.scheme = s;
  c.gamma = gamma;
  c.delta = delta;
  return c;
}

TEST(ApplyScheme, ZeroDeltaIsIdentity) {
  const std::vector<double> l{0.3, -1.0, 2.5, 7.0};
  const GreenMask mask{{true, false, true, true}};
  EXPECT_EQ(apply_scheme(l, mask, Cfg(Scheme::kSoft, 0.25, 0.0)), l);
  EXPECT_EQ(apply_scheme(l, mask, Cfg(Scheme::kNone)), l);
}

TEST(ApplyScheme, SoftAddsDeltaToGreen) {
  const std::vector<double> l{0.0, 0.0};
  const auto out = apply_scheme(l, GreenMask{{true, false}}, Cfg(Scheme::kSoft, 0.5, 2.0));
  EXPECT_EQ(out, (std::vector<double>{2.0, 0.0}));
  const auto p = softmax(out);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(p[0], e2 / (e2 + 1.0), 1e-15);
  EXPECT_NEAR(p[1], 1.0 / (e2 + 1.0), 1e-15);
}

TEST(ApplyScheme, HardRestrictsToGreen) {
  const std::vector<double> l{5.0, 1.0};
  const auto out = apply_scheme(l, GreenMask{{false, true}}, Cfg(Scheme::kHard, 0.5));
  EXPECT_EQ(out[0], kLogitFloor);
  const auto p = softmax(out);
  EXPECT_EQ(p[1], 1.0);
  for (std::uint64_t s = 0; s < 100; ++s) {
    SplitMix64 rng(s);
    EXPECT_EQ(sample(p, rng), 1u);
  }
}

TEST(ApplyScheme, LengthMismatchIsAnInputError) {
  const std::vector<double> l{0.0, 1.0, 2.0};
  EXPECT_THROW(apply_scheme(l, GreenMask{{true, false}}, Cfg(Scheme::kSoft)), InputError);
}

TEST(ApplyScheme, PreservesOrderWithinEachList) {
  SplitMix64 rng(9);
  for (Scheme s : {Scheme::kSoft, Scheme::kHard, Scheme::kUnigram, Scheme::kWindowMin}) {
    std::vector<double> l(200);
    for (auto& x : l) x = 10.0 * rng.uniform() - 5.0;
    const auto mask = make_green_mask(rng.next(), 0.3, l.size());
    const auto out = apply_scheme(l, mask, Cfg(s, 0.3, 3.0));
    for (std::size_t i = 0; i < l.size(); ++i)
      for (std::size_t j = 0; j < l.size(); ++j)
        if (mask[i] == mask[j] && l[i] < l[j]) {
          ASSERT_LE(out[i], out[j]);
        }
  }
}

TEST(GreenMask, MatchesPerTokenTest) {
  const auto mask = make_green_mask(1234, 0.25, 500);
  ASSERT_EQ(mask.size(), 500u);
  for (TokenId t = 0; t < 500; ++t) EXPECT_EQ(mask[t], is_green(t, 1234, 0.25));
}

TEST(WatermarkedStep, NoneSchemeFollowsOneHotScript) {
  Vocabulary v({"a", "b", "c", "d"});
  ScriptedModel m(v, 1, {0.0, 0.0, 0.0, 0.0});
  m.set({1}, {0.0, 0.0, 1e6, 0.0});
  SplitMix64 rng(3);
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(watermarked_step(m, TokenSeq{1}, seed, Cfg(Scheme::kNone), rng), 2u);
}

TEST(WatermarkedStep, ContextShorterThanWindowIsRejected) {
  ScriptedModel m(Vocabulary({"a", "b"}), 1, {0.0, 0.0});
  auto cfg = Cfg(Scheme::kSoft);
  cfg.h = 2;
  SplitMix64 rng(1);
  EXPECT_THROW(watermarked_step(m, TokenSeq{0}, 5, cfg, rng), InputError);
}

std::vector<std::string> Words(std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i));
  return w;
}

TEST(WatermarkedStep, HardSchemeEmitsOnlyGreenTokens) {
  ScriptedModel m(Vocabulary(Words(64)), 1, std::vector<double>(64, 0.0));
  const auto cfg = Cfg(Scheme::kHard, 0.5);
  SplitMix64 rng(17);
  TokenSeq ctx{0};
  for (int step = 0; step < 10000; ++step) {
    const std::uint64_t chunk_seed = 1 + step % 37;
    const TokenId t = watermarked_step(m, ctx, chunk_seed, cfg, rng);
    ASSERT_TRUE(is_green(t, position_seed(std::span<const TokenId>(ctx).last(1), chunk_seed, cfg), cfg.gamma));
    ctx.push_back(t);
  }
}

TEST(WatermarkedStep, SoftSchemeGreenRateMatchesClosedForm) {
  constexpr std::size_t kV = 1000;
  ScriptedModel m(Vocabulary(Words(kV)), 1, std::vector<double>(kV, 0.0));
  const auto cfg = Cfg(Scheme::kSoft, 0.25, 4.0);
  const double ge = 0.25 * std::exp(4.0);
  const double expected = ge / (ge + 0.75);  // ~0.9479
  constexpr int kSteps = 10000;
  SplitMix64 rng(23);
  int green = 0;
  for (int step = 0; step < kSteps; ++step) {
    const TokenSeq ctx{static_cast<TokenId>(rng.below(kV))};
    const std::uint64_t chunk_seed = 1 + rng.below(5000);
    const TokenId t = watermarked_step(m, ctx, chunk_seed, cfg, rng);
    green += is_green(t, position_seed(ctx, chunk_seed, cfg), cfg.gamma);
  }
  const double rate = static_cast<double>(green) / kSteps;
  const double sigma = std::sqrt(expected * (1.0 - expected) / kSteps);
  EXPECT_NEAR(expected, 0.9479, 1e-4);
  EXPECT_NEAR(rate, expected, 3.0 * sigma);
}

TEST(WatermarkedStep, ZeroDeltaLeavesDistributionUnchanged) {
  ScriptedModel m(Vocabulary(Words(8)), 1, {0.1, 1.0, -2.0, 0.5, 3.0, 0.0, -1.0, 2.0});
  const auto cfg = Cfg(Scheme::kSoft, 0.25, 0.0);
  // Same rng stream: the sampled tokens must coincide.
  SplitMix64 a(5), b(5);
  for (int i = 0; i < 1000; ++i)
    ASSERT_EQ(watermarked_step(m, TokenSeq{3}, i, cfg, a), watermarked_step(m, TokenSeq{3}, i, Cfg(Scheme::kNone), b));
}

}  // namespace
}  // namespace watersearch
