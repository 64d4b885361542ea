#pragma once

// Chunked candidate search. For every chunk: draw k-1 seeds from the keyed
// pool, decode one unwatermarked reference chunk and k-1 watermarked chunks
// from the same prefix, score each watermarked chunk against the reference,
// commit the best one and continue from the extended prefix.

#include <cstdint>
#include <span>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/keys_partition.hpp"
#include "watersearch/parallel.hpp"
#include "watersearch/quality_metrics.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/schemes.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

struct SearchConfig {
  std::size_t chunk_size = 20;
  std::size_t beams = 5;  // 1 reference + (beams - 1) watermarked candidates
  double alpha = 0.75;
  std::size_t max_tokens = 200;
  Similarity similarity;

  std::size_t candidates() const noexcept { return beams - 1; }

  void validate() const {
    if (chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
    if (beams < 2) throw ConfigError("beams must be >= 2 (one reference plus at least one candidate)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    similarity.validate();
  }
};

struct Chunk {
  TokenSeq tokens;
  bool ended = false;  // stopped on end-of-sequence before chunk_size tokens
};

struct CandidateScore {
  double similarity = 0.0;
  double green_fraction = 0.0;
  double score = 0.0;
  std::size_t green_count = 0;
};

struct ChunkRecord {
  std::size_t chunk_index = 0;
  std::vector<std::uint64_t> seeds;
  Chunk reference;
  std::vector<Chunk> candidates;
  std::vector<CandidateScore> scores;
  std::size_t chosen = 0;
  TokenSeq committed;
};

struct GenerationTrace {
  WatermarkConfig watermark;
  SearchConfig search;
  std::uint64_t rng_seed = 0;
  TokenSeq prompt;
  std::vector<ChunkRecord> chunks;

  TokenSeq output() const {
    TokenSeq out;
    for (const auto& c : chunks) out.insert(out.end(), c.committed.begin(), c.committed.end());
    return out;
  }
};

// Decodes up to `max_len` tokens after `context`. With seed == nullopt or
// scheme none this is plain sampling. The eos token is never emitted; it
// ends the chunk.
inline Chunk decode_chunk(const TokenModel& model, std::span<const TokenId> context, std::uint64_t chunk_seed,
                          const WatermarkConfig& cfg, std::size_t max_len, SplitMix64 rng) {
  Chunk chunk;
  TokenSeq ctx(context.begin(), context.end());
  const auto eos = model.eos();
  for (std::size_t t = 0; t < max_len; ++t) {
    const TokenId next = watermarked_step(model, ctx, chunk_seed, cfg, rng);
    if (eos && next == *eos) {
      chunk.ended = true;
      break;
    }
    chunk.tokens.push_back(next);
    ctx.push_back(next);
  }
  return chunk;
}

struct CandidateSet {
  Chunk reference;
  std::vector<Chunk> candidates;
};

// Reference uses substream 0 of (rng_seed, chunk_index), candidate i uses
// substream i + 1, so the result does not depend on `threads`.
inline CandidateSet generate_candidates(const TokenModel& model, std::span<const TokenId> context,
                                        std::span<const std::uint64_t> seeds, const WatermarkConfig& wm,
                                        const SearchConfig& search, std::uint64_t rng_seed,
                                        std::size_t chunk_index, unsigned threads = 1) {
  if (seeds.size() != search.candidates())
    throw ConfigError("expected " + std::to_string(search.candidates()) + " seeds, got " +
                      std::to_string(seeds.size()));
  if (context.size() < static_cast<std::size_t>(wm.h)) throw InputError("context shorter than watermark window h");
  WatermarkConfig plain = wm;
  plain.scheme = Scheme::kNone;
  CandidateSet out;
  out.candidates.resize(seeds.size());
  parallel_for(seeds.size() + 1, threads, [&](std::size_t i) {
    auto rng = substream(rng_seed, chunk_index, i);
    if (i == 0)
      out.reference = decode_chunk(model, context, 0, plain, search.chunk_size, rng);
    else
      out.candidates[i - 1] = decode_chunk(model, context, seeds[i - 1], wm, search.chunk_size, rng);
  });
  return out;
}

inline std::vector<CandidateScore> score_candidates(const TokenSeq& reference, const std::vector<TokenSeq>& candidates,
                                                    std::span<const TokenId> committed_context,
                                                    std::span<const std::uint64_t> seeds, const WatermarkConfig& wm,
                                                    const SearchConfig& search) {
  if (candidates.size() != seeds.size()) throw ConfigError("one seed per candidate is required");
  std::vector<CandidateScore> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto gc = count_green(candidates[i], committed_context, seeds[i], wm);
    auto& s = scores[i];
    s.green_count = gc.green;
    s.green_fraction = gc.scored == 0 ? 0.0 : static_cast<double>(gc.green) / static_cast<double>(gc.scored);
    s.similarity = similarity(reference, candidates[i], search.similarity);
    s.score = selection_score(s.similarity, s.green_fraction, search.alpha);
  }
  return scores;
}

// Argmax of the selection score; ties go to the lowest index.
inline std::size_t select_best(std::span<const CandidateScore> scores) {
  if (scores.empty()) throw InputError("no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].score > scores[best].score) best = i;
  return best;
}

inline std::size_t select_best(const TokenSeq& reference, const std::vector<TokenSeq>& candidates,
                               std::span<const TokenId> committed_context, std::span<const std::uint64_t> seeds,
                               const WatermarkConfig& wm, const SearchConfig& search) {
  const auto scores = score_candidates(reference, candidates, committed_context, seeds, wm, search);
  return select_best(scores);
}

inline GenerationTrace watersearch_generate(const TokenModel& model, const TokenSeq& prompt,
                                            const WatermarkConfig& wm, const SearchConfig& search,
                                            std::uint64_t rng_seed, unsigned threads = 1) {
  wm.validate();
  search.validate();
  if (prompt.size() < static_cast<std::size_t>(wm.h)) throw InputError("prompt shorter than watermark window h");
  for (TokenId id : prompt) model.vocab().check(id);

  GenerationTrace trace{wm, search, rng_seed, prompt, {}};
  SeedPool pool(wm.master_key, wm.pool_size);
  TokenSeq context = prompt;
  std::size_t produced = 0;
  for (std::size_t chunk_index = 0; produced < search.max_tokens; ++chunk_index) {
    ChunkRecord rec;
    rec.chunk_index = chunk_index;
    rec.seeds = pool.next_chunk_seeds(search.candidates());
    SearchConfig step = search;
    step.chunk_size = std::min(search.chunk_size, search.max_tokens - produced);
    auto set = generate_candidates(model, context, rec.seeds, wm, step, rng_seed, chunk_index, threads);
    rec.reference = std::move(set.reference);
    rec.candidates = std::move(set.candidates);

    std::vector<TokenSeq> cand_tokens;
    for (const auto& c : rec.candidates) cand_tokens.push_back(c.tokens);
    rec.scores = score_candidates(rec.reference.tokens, cand_tokens, context, rec.seeds, wm, search);
    rec.chosen = select_best(rec.scores);
    rec.committed = rec.candidates[rec.chosen].tokens;

    context.insert(context.end(), rec.committed.begin(), rec.committed.end());
    produced += rec.committed.size();
    const bool ended = rec.candidates[rec.chosen].ended;
    trace.chunks.push_back(std::move(rec));
    if (ended) break;
  }
  return trace;
}

// Single-seed KGW baseline: every position keyed by the master key, no search.
inline TokenSeq kgw_generate(const TokenModel& model, const TokenSeq& prompt, const WatermarkConfig& wm,
                             std::size_t max_tokens, std::uint64_t rng_seed) {
  wm.validate();
  if (prompt.size() < static_cast<std::size_t>(wm.h)) throw InputError("prompt shorter than watermark window h");
  auto chunk = decode_chunk(model, prompt, wm.master_key, wm, max_tokens, substream(rng_seed, ~std::uint64_t{0}));
  return chunk.tokens;
}

// Unwatermarked sampling from the base model.
inline TokenSeq plain_generate(const TokenModel& model, const TokenSeq& prompt, std::size_t max_tokens,
                               std::uint64_t rng_seed) {
  WatermarkConfig plain;
  plain.scheme = Scheme::kNone;
  auto chunk = decode_chunk(model, prompt, 0, plain, max_tokens, substream(rng_seed, ~std::uint64_t{0}, 1));
  return chunk.tokens;
}

}  // namespace watersearch
