#pragma once

// Candidate ranking: ROUGE-L and bag-of-words cosine similarity against the
// unwatermarked reference, green fraction under a chunk seed, and the
// alpha-weighted selection score that combines them.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/keys_partition.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

enum class SimilarityKind { kRougeL, kBowCosine };

struct Similarity {
  SimilarityKind kind = SimilarityKind::kRougeL;
  double beta = 1.0;  // ROUGE-L recall weight

  void validate() const {
    if (!(beta > 0.0)) throw ConfigError("ROUGE-L beta must be > 0");
  }
};

inline std::string_view to_string(SimilarityKind k) { return k == SimilarityKind::kRougeL ? "rouge_l" : "bow_cosine"; }

inline SimilarityKind parse_similarity(std::string_view s) {
  if (s == "rouge_l" || s == "rouge-l") return SimilarityKind::kRougeL;
  if (s == "bow_cosine" || s == "bow-cosine") return SimilarityKind::kBowCosine;
  throw ConfigError("unknown similarity '" + std::string(s) + "'");
}

// O(|a|·|b|) time, O(min) memory.
template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const T& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

template <typename T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  return lcs_length(std::span<const T>(a), std::span<const T>(b));
}

// (1 + beta^2) L / (m + beta^2 n) with m = |ref|, n = |cand|.
template <typename T>
double rouge_l(std::span<const T> ref, std::span<const T> cand, double beta = 1.0) {
  if (!(beta > 0.0)) throw ConfigError("ROUGE-L beta must be > 0");
  if (ref.empty() && cand.empty()) return 1.0;
  if (ref.empty() || cand.empty()) return 0.0;
  const double l = static_cast<double>(lcs_length(ref, cand));
  const double b2 = beta * beta;
  return (1.0 + b2) * l / (static_cast<double>(ref.size()) + b2 * static_cast<double>(cand.size()));
}

template <typename T>
double rouge_l(const std::vector<T>& ref, const std::vector<T>& cand, double beta = 1.0) {
  return rouge_l(std::span<const T>(ref), std::span<const T>(cand), beta);
}

// Cosine of term-frequency vectors.
template <typename T>
double bow_cosine(std::span<const T> a, std::span<const T> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::map<T, std::pair<double, double>> tf;
  for (const T& x : a) tf[x].first += 1.0;
  for (const T& x : b) tf[x].second += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [tok, c] : tf) {
    dot += c.first * c.second;
    na += c.first * c.first;
    nb += c.second * c.second;
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

template <typename T>
double bow_cosine(const std::vector<T>& a, const std::vector<T>& b) {
  return bow_cosine(std::span<const T>(a), std::span<const T>(b));
}

inline double similarity(std::span<const TokenId> ref, std::span<const TokenId> cand, const Similarity& sim) {
  return sim.kind == SimilarityKind::kRougeL ? rouge_l(ref, cand, sim.beta) : bow_cosine(ref, cand);
}

inline double selection_score(double similarity, double green_fraction, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  return alpha * similarity + (1.0 - alpha) * green_fraction;
}

// Fraction of chunk tokens that are green under their own position seed. An
// empty chunk (or one with no scorable position) has fraction 0.
inline double green_fraction(std::span<const TokenId> chunk, std::span<const TokenId> committed_context,
                             std::uint64_t chunk_seed, const WatermarkConfig& cfg) {
  const auto gc = count_green(chunk, committed_context, chunk_seed, cfg);
  return gc.scored == 0 ? 0.0 : static_cast<double>(gc.green) / static_cast<double>(gc.scored);
}

}  // namespace watersearch
