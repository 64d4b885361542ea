#pragma once

// Chunk-level max-binomial tests combined with Fisher's method, and the
// single-seed z-score baseline.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/keys_partition.hpp"
#include "watersearch/parallel.hpp"
#include "watersearch/search_generation.hpp"
#include "watersearch/stat_kernels.hpp"

namespace watersearch {

inline constexpr double kDefaultThreshold = 0.01;

struct ChunkDetection {
  std::size_t chunk_index = 0;
  std::size_t length = 0;       // tokens in the chunk
  std::size_t n_effective = 0;  // distinct scored (window, token) pairs
  std::vector<std::size_t> green_counts;  // one per seed
  std::size_t z_max = 0;
  double p_value = 1.0;
  bool skipped = false;
};

struct DetectionReport {
  std::vector<ChunkDetection> chunks;
  double fisher_stat = 0.0;
  double doc_p_value = 1.0;
  double threshold = kDefaultThreshold;
  bool watermarked = false;
  bool prompt_supplied = false;
  // Echo of the configuration the report was computed under.
  WatermarkConfig watermark;
  std::size_t beams = 0;
  std::size_t chunk_size = 0;
};

// `preceding` supplies context for the first positions of the chunk: the
// prompt (if any) followed by all earlier document tokens.
inline ChunkDetection detect_chunk(std::span<const TokenId> chunk, std::span<const TokenId> preceding,
                                   std::span<const std::uint64_t> seeds, const WatermarkConfig& wm) {
  if (chunk.empty()) throw InputError("cannot test an empty chunk");
  if (seeds.empty()) throw ConfigError("chunk test needs at least one seed");
  ChunkDetection out;
  out.length = chunk.size();
  out.green_counts.reserve(seeds.size());
  for (auto seed : seeds) {
    const auto gc = count_green(chunk, preceding, seed, wm);
    out.n_effective = gc.scored;
    out.green_counts.push_back(gc.green);
    out.z_max = std::max(out.z_max, gc.green);
  }
  if (out.n_effective == 0) {
    out.skipped = true;
    out.p_value = 1.0;
    return out;
  }
  const ChunkTestParams params{static_cast<long>(out.n_effective), wm.gamma, static_cast<long>(seeds.size())};
  out.p_value = clamp_pvalue(chunk_pvalue(static_cast<long>(out.z_max), params));
  return out;
}

using SeedSchedule = std::vector<std::vector<std::uint64_t>>;

// Splits `tokens` into consecutive chunks of `search.chunk_size`, replays the
// seed pool for each chunk, tests every chunk and combines the non-skipped
// chunk p-values. `schedule` may carry a precomputed replay covering at least
// the required chunks (it only depends on the key and pool size).
inline DetectionReport detect_document(std::span<const TokenId> tokens, std::optional<std::span<const TokenId>> prompt,
                                       const WatermarkConfig& wm, const SearchConfig& search,
                                       double threshold = kDefaultThreshold, const SeedSchedule* schedule = nullptr,
                                       unsigned threads = 1) {
  wm.validate();
  search.validate();
  if (tokens.empty()) throw InputError("cannot detect on an empty token sequence");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in (0, 1]");
  const std::size_t m = search.chunk_size;
  const std::size_t n_chunks = (tokens.size() + m - 1) / m;

  SeedSchedule local;
  if (!schedule || schedule->size() < n_chunks || (n_chunks && schedule->front().size() != search.candidates())) {
    local = seed_schedule(wm, n_chunks, search.candidates());
    schedule = &local;
  }

  TokenSeq full;
  if (prompt) full.assign(prompt->begin(), prompt->end());
  const std::size_t offset = full.size();
  full.insert(full.end(), tokens.begin(), tokens.end());

  DetectionReport rep;
  rep.threshold = threshold;
  rep.prompt_supplied = prompt.has_value();
  rep.watermark = wm;
  rep.beams = search.beams;
  rep.chunk_size = m;
  rep.chunks.resize(n_chunks);
  parallel_for(n_chunks, threads, [&](std::size_t i) {
    const std::size_t begin = offset + i * m;
    const std::size_t end = std::min(begin + m, full.size());
    std::span<const TokenId> all(full);
    rep.chunks[i] = detect_chunk(all.subspan(begin, end - begin), all.first(begin), (*schedule)[i], wm);
    rep.chunks[i].chunk_index = i;
  });

  std::vector<double> pvals;
  for (const auto& c : rep.chunks)
    if (!c.skipped) pvals.push_back(c.p_value);
  if (!pvals.empty()) {
    const auto f = fisher_combine(pvals);
    rep.fisher_stat = f.statistic;
    rep.doc_p_value = f.p_value;
  }
  rep.watermarked = rep.doc_p_value < threshold;
  return rep;
}

// z statistic of the single-seed KGW detector: green tokens keyed
// by the master key over all scorable positions.
inline double baseline_zscore(std::span<const TokenId> tokens, std::optional<std::span<const TokenId>> prompt,
                              const WatermarkConfig& wm) {
  wm.validate();
  std::span<const TokenId> pre;
  if (prompt) pre = *prompt;
  const auto gc = count_green(tokens, pre, wm.master_key, wm);
  if (gc.scored == 0) throw InputError("no scorable tokens for the z-test");
  const double t = static_cast<double>(gc.scored);
  return (static_cast<double>(gc.green) - wm.gamma * t) / std::sqrt(wm.gamma * (1.0 - wm.gamma) * t);
}

// One-sided normal tail P(N(0,1) >= z).
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace watersearch
