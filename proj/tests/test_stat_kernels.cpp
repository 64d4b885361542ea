#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "watersearch/evaluation.hpp"
#include "watersearch/stat_kernels.hpp"

namespace watersearch {
namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// Exact P(X <= z) for X ~ Binomial(n, num/den).
cpp_rational ExactBinomCdf(int z, int n, int num, int den) {
  const cpp_rational p(num, den), q = 1 - p;
  cpp_rational acc = 0;
  cpp_int c = 1;
  for (int j = 0; j <= z && j <= n; ++j) {
    if (j > 0) c = c * (n - j + 1) / j;
    cpp_rational term = cpp_rational(c);
    for (int i = 0; i < j; ++i) term *= p;
    for (int i = j; i < n; ++i) term *= q;
    acc += term;
  }
  return acc;
}

TEST(BinomCdf, Edges) {
  EXPECT_EQ(binom_cdf(-1, 10, 0.3), 0.0);
  EXPECT_EQ(binom_cdf(10, 10, 0.3), 1.0);
  EXPECT_EQ(binom_cdf(15, 10, 0.3), 1.0);
  EXPECT_THROW(binom_cdf(3, 10, 0.0), DomainError);
  EXPECT_THROW(binom_cdf(3, 10, 1.0), DomainError);
}

TEST(BinomCdf, HalfCoinExample) {
  EXPECT_EQ(ExactBinomCdf(5, 10, 1, 2), cpp_rational(638, 1024));
  EXPECT_NEAR(binom_cdf(5, 10, 0.5), 0.623046875, 1e-15);
}

TEST(BinomCdf, MatchesExactRationalEnumeration) {
  const std::pair<int, int> ps[] = {{1, 10}, {1, 4}, {1, 2}};
  for (auto [num, den] : ps)
    for (int n = 1; n <= 30; ++n)
      for (int z = -1; z <= n; ++z) {
        const double exact = static_cast<double>(ExactBinomCdf(z, n, num, den));
        ASSERT_NEAR(binom_cdf(z, n, static_cast<double>(num) / den), exact, 1e-12) << n << " " << z;
      }
}

TEST(BinomUpper, ComplementsCdf) {
  for (long z = 0; z <= 20; ++z) EXPECT_NEAR(binom_upper(z, 20, 0.25), 1.0 - binom_cdf(z - 1, 20, 0.25), 1e-14);
  // Far tail keeps relative precision: P(X = 20) = 0.25^20.
  EXPECT_NEAR(binom_upper(20, 20, 0.25) / std::pow(0.25, 20), 1.0, 1e-12);
}

TEST(MaxBinom, Examples) {
  EXPECT_DOUBLE_EQ(max_binom_cdf(5, {10, 0.5, 1}), binom_cdf(5, 10, 0.5));
  EXPECT_NEAR(max_binom_cdf(5, {10, 0.5, 3}), std::pow(0.623046875, 3), 1e-15);
  EXPECT_NEAR(max_binom_cdf(5, {10, 0.5, 3}), 0.241859, 1e-6);
  EXPECT_EQ(max_binom_cdf(10, {10, 0.5, 3}), 1.0);
  double prev = 0.0;
  for (long z = -1; z <= 20; ++z) {
    const double f = max_binom_cdf(z, {20, 0.25, 4});
    EXPECT_GE(f, prev);
    prev = f;
  }
  EXPECT_THROW(max_binom_cdf(1, {0, 0.5, 1}), DomainError);
  EXPECT_THROW(max_binom_cdf(1, {5, 0.5, 0}), DomainError);
}

TEST(ChunkPValue, Examples) {
  EXPECT_EQ(chunk_pvalue(0, {10, 0.5, 3}), 1.0);
  EXPECT_NEAR(chunk_pvalue(6, {10, 0.5, 3}), 1.0 - std::pow(0.623046875, 3), 1e-15);
  EXPECT_NEAR(chunk_pvalue(6, {10, 0.5, 3}), 0.758141, 1e-6);
  EXPECT_THROW(chunk_pvalue(11, {10, 0.5, 3}), InputError);
  // 1 - (1 - 0.25^20)^4 ~ 4 * 0.25^20 ~ 3.6e-12.
  EXPECT_NEAR(chunk_pvalue(20, {20, 0.25, 4}) / (4.0 * std::pow(0.25, 20)), 1.0, 1e-9);
}

TEST(ChunkPValue, MatchesMaxOfBinomialsSampling) {
  constexpr int kDraws = 100000;
  const ChunkTestParams params{20, 0.25, 4};
  SplitMix64 rng(314);
  std::vector<int> hist(21, 0);
  for (int d = 0; d < kDraws; ++d) {
    int mx = 0;
    for (int s = 0; s < 4; ++s) {
      int g = 0;
      for (int t = 0; t < 20; ++t) g += rng.uniform() < 0.25;
      mx = std::max(mx, g);
    }
    ++hist[mx];
  }
  // 21 correlated comparisons: 4 sigma keeps the family-wise false alarm rate small.
  int tail = kDraws;
  for (long z = 0; z <= 20; ++z) {
    const double expected = chunk_pvalue(z, params);
    const double emp = static_cast<double>(tail) / kDraws;
    const double sigma = std::sqrt(expected * (1.0 - expected) / kDraws);
    EXPECT_NEAR(emp, expected, 4.0 * sigma + 1e-12) << "z=" << z;
    tail -= hist[z];
  }
}

TEST(ChunkPValue, ConservativeUnderDiscreteness) {
  constexpr int kDraws = 100000;
  const ChunkTestParams params{20, 0.25, 4};
  SplitMix64 rng(2718);
  std::vector<double> p(kDraws);
  for (auto& x : p) {
    long mx = 0;
    for (int s = 0; s < 4; ++s) {
      long g = 0;
      for (int t = 0; t < 20; ++t) g += rng.uniform() < 0.25;
      mx = std::max(mx, g);
    }
    x = chunk_pvalue(mx, params);
  }
  for (double a : {0.01, 0.05, 0.1}) {
    const double rate = static_cast<double>(std::count_if(p.begin(), p.end(), [a](double x) { return x <= a; })) / kDraws;
    EXPECT_LE(rate, a + 3.0 * std::sqrt(a * (1.0 - a) / kDraws)) << a;
  }
}

TEST(ChisqSf, ClosedForms) {
  EXPECT_EQ(chisq_sf(0.0, 4), 1.0);
  EXPECT_NEAR(chisq_sf(2.0, 2), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(chisq_sf(18.4207, 4), std::exp(-9.21035) * (1.0 + 9.21035), 1e-15);
  EXPECT_NEAR(chisq_sf(18.4207, 4), 1.021e-3, 1e-6);
  for (double x = 0.0; x < 200.0; x += 0.37) EXPECT_NEAR(chisq_sf(x, 2) / std::exp(-x / 2), 1.0, 1e-14);
  EXPECT_THROW(chisq_sf(1.0, 3), DomainError);
  EXPECT_THROW(chisq_sf(-1.0, 2), DomainError);
  EXPECT_GT(chisq_sf(5000.0, 2), 0.0);
}

TEST(ChisqSf, MatchesDensityQuadrature) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (int df = 2; df <= 20; df += 2) {
    const double k = df / 2.0, log_norm = k * std::log(2.0) + boost::math::lgamma(k);
    auto density = [&](double t) { return t <= 0.0 ? 0.0 : std::exp((k - 1.0) * std::log(t) - t / 2.0 - log_norm); };
    for (double x : {0.5, 1.0, 3.0, 7.5, 15.0, 30.0, 60.0}) {
      const double q = integrator.integrate([&](double u) { return density(x + u); });
      EXPECT_NEAR(chisq_sf(x, df), q, 1e-9) << "df=" << df << " x=" << x;
    }
  }
}

TEST(Fisher, Examples) {
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto r1 = fisher_combine(ones);
  EXPECT_EQ(r1.statistic, 0.0);
  EXPECT_EQ(r1.p_value, 1.0);
  EXPECT_EQ(r1.df, 6);

  for (double p : {0.9, 0.5, 0.01, 1e-8, 1e-200}) {
    const std::vector<double> one{p};
    EXPECT_NEAR(fisher_combine(one).p_value / p, 1.0, 1e-12);
  }

  const std::vector<double> two{0.01, 0.01};
  const auto r2 = fisher_combine(two);
  EXPECT_NEAR(r2.statistic, 18.4207, 1e-4);
  EXPECT_NEAR(r2.p_value, 0.00102, 5e-6);
  EXPECT_EQ(r2.df, 4);
}

TEST(Fisher, Errors) {
  EXPECT_THROW(fisher_combine(std::vector<double>{}), DomainError);
  EXPECT_THROW(fisher_combine(std::vector<double>{0.5, 0.0}), DomainError);
  EXPECT_THROW(fisher_combine(std::vector<double>{1.5}), DomainError);
  EXPECT_EQ(clamp_pvalue(0.0), kMinPValue);
  EXPECT_EQ(clamp_pvalue(2.0), 1.0);
}

TEST(Fisher, UniformUnderContinuousNull) {
  SplitMix64 rng(99);
  std::vector<double> doc(10000);
  for (auto& d : doc) {
    std::vector<double> p(10);
    for (auto& x : p) x = 1.0 - rng.uniform();  // (0, 1]
    d = fisher_combine(p).p_value;
  }
  EXPECT_GT(ks_uniform(doc).p_two_sided, 0.01);
}

}  // namespace
}  // namespace watersearch
