#pragma once

// Binomial and max-of-binomials tails, the chunk p-value built on them, an
// even-df chi-square survival function and Fisher's p-value combination.
// Everything is evaluated in log space; pure and thread-safe.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "watersearch/errors.hpp"

namespace watersearch {

inline constexpr double kMinPValue = 1e-300;

struct ChunkTestParams {
  long n = 1;       // scored tokens in the chunk
  double p = 0.25;  // null green probability (gamma)
  long s = 1;       // number of seeds the maximum is taken over

  void validate() const {
    if (n < 1) throw DomainError("chunk length n must be >= 1");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0, 1)");
    if (s < 1) throw DomainError("seed count s must be >= 1");
  }
};

namespace detail {

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

// Splits the binomial mass at z: returns {P(X <= z), P(X > z)}, each computed
// from its own tail and normalized by their sum.
inline std::pair<double, double> binom_split(long z, long n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("binomial p must lie in (0, 1)");
  if (n < 0) throw DomainError("binomial n must be >= 0");
  if (z < 0) return {0.0, 1.0};
  if (z >= n) return {1.0, 0.0};
  std::vector<double> logpmf(static_cast<std::size_t>(n) + 1);
  const double lp = std::log(p), lq = std::log1p(-p);
  double log_choose = 0.0;
  for (long j = 0; j <= n; ++j) {
    if (j > 0) log_choose += std::log(static_cast<double>(n - j + 1)) - std::log(static_cast<double>(j));
    logpmf[static_cast<std::size_t>(j)] = log_choose + static_cast<double>(j) * lp + static_cast<double>(n - j) * lq;
  }
  const double mx = *std::max_element(logpmf.begin(), logpmf.end());
  CompensatedSum lower, upper;
  for (long j = 0; j <= n; ++j) {
    const double t = std::exp(logpmf[static_cast<std::size_t>(j)] - mx);
    (j <= z ? lower : upper).add(t);
  }
  const double lo = lower.value(), up = upper.value(), total = lo + up;
  return {lo / total, up / total};
}

}  // namespace detail

// P(X <= z) for X ~ Binomial(n, p).
inline double binom_cdf(long z, long n, double p) { return detail::binom_split(z, n, p).first; }

// P(X >= z) for X ~ Binomial(n, p).
inline double binom_upper(long z, long n, double p) { return detail::binom_split(z - 1, n, p).second; }

// P(max of s iid Binomial(n, p) <= z).
inline double max_binom_cdf(long z, const ChunkTestParams& params) {
  params.validate();
  return std::pow(binom_cdf(z, params.n, params.p), static_cast<double>(params.s));
}

// P(Z >= z_obs) = 1 - F(z_obs - 1)^s, evaluated as -expm1(s log1p(-U)) with
// U = P(X >= z_obs) so that tiny p-values keep full precision.
inline double chunk_pvalue(long z_obs, const ChunkTestParams& params) {
  params.validate();
  if (z_obs < 0) throw InputError("observed maximum must be >= 0");
  if (z_obs > params.n) throw InputError("observed maximum exceeds chunk length");
  const double u = binom_upper(z_obs, params.n, params.p);
  if (u >= 1.0) return 1.0;
  const double pv = -std::expm1(static_cast<double>(params.s) * std::log1p(-u));
  return std::clamp(pv, 0.0, 1.0);
}

// Survival function of chi-square with even df:
// exp(-x/2) * sum_{i < df/2} (x/2)^i / i!, summed in log space.
inline double chisq_sf(double x, int df) {
  if (df <= 0 || df % 2 != 0) throw DomainError("chisq_sf supports even positive df only");
  if (!(x >= 0.0)) throw DomainError("chisq_sf requires x >= 0");
  if (x == 0.0) return 1.0;
  const int k = df / 2;
  const double half = 0.5 * x, lhalf = std::log(half);
  std::vector<double> terms(static_cast<std::size_t>(k));
  double log_fact = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i > 0) log_fact += std::log(static_cast<double>(i));
    terms[static_cast<std::size_t>(i)] = static_cast<double>(i) * lhalf - log_fact;
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  detail::CompensatedSum acc;
  for (double t : terms) acc.add(std::exp(t - mx));
  const double log_sf = mx + std::log(acc.value()) - half;
  const double sf = std::exp(log_sf);
  if (sf <= 0.0) return std::numeric_limits<double>::denorm_min();
  return std::min(sf, 1.0);
}

struct FisherResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

// -2 sum ln p_i ~ chi-square(2 * count) under the null.
inline FisherResult fisher_combine(std::span<const double> pvals) {
  if (pvals.empty()) throw DomainError("fisher_combine needs at least one p-value");
  detail::CompensatedSum acc;
  for (double p : pvals) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("p-values must lie in (0, 1]");
    acc.add(std::log(p));
  }
  FisherResult r;
  r.statistic = std::max(0.0, -2.0 * acc.value());
  r.df = 2 * static_cast<int>(pvals.size());
  r.p_value = chisq_sf(r.statistic, r.df);
  return r;
}

inline double clamp_pvalue(double p) noexcept { return std::clamp(p, kMinPValue, 1.0); }

}  // namespace watersearch
