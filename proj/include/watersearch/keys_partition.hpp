#pragma once

// Keyed seed pool, per-position token seeds and green-list membership.
// Generation and detection both go through these functions, so they agree
// bit-for-bit on which tokens are green.

#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

enum class Scheme { kNone, kHard, kSoft, kUnigram, kWindowMin };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::kNone: return "none";
    case Scheme::kHard: return "hard";
    case Scheme::kSoft: return "soft";
    case Scheme::kUnigram: return "unigram";
    case Scheme::kWindowMin: return "window-min";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "none") return Scheme::kNone;
  if (s == "hard") return Scheme::kHard;
  if (s == "soft") return Scheme::kSoft;
  if (s == "unigram") return Scheme::kUnigram;
  if (s == "window-min") return Scheme::kWindowMin;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

inline constexpr std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
inline constexpr bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) d >>= 1, ++s;
  auto powmod = [n](std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    b %= n;
    while (e) {
      if (e & 1) r = mulmod(r, b, n);
      b = mulmod(b, b, n);
      e >>= 1;
    }
    return r;
  };
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod(a, d);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

struct WatermarkConfig {
  double gamma = 0.25;
  double delta = 4.0;
  Scheme scheme = Scheme::kSoft;
  int h = 1;
  std::uint64_t master_key = 41;
  std::uint64_t modulus = kMersenne61;
  std::size_t pool_size = 5000;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(delta >= 0.0)) throw ConfigError("delta must be >= 0");
    if (h < 1) throw ConfigError("context width h must be >= 1");
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
    if (!is_prime(modulus)) throw ConfigError("modulus must be prime");
    if (modulus <= pool_size) throw ConfigError("modulus must exceed pool_size");
  }
};

// Non-reversible 64-bit fingerprint of the master key, for reports.
inline std::uint64_t key_fingerprint(std::uint64_t master_key) noexcept {
  return mix64(mix64(master_key) ^ 0xA0761D6478BD642FULL);
}

// Key-shuffled seed pool. Each chunk performs one Fisher-Yates pass driven by
// a persistent SplitMix64 stream seeded with the master key and hands out the
// first `count` entries. Replaying from the same key reproduces every chunk.
class SeedPool {
 public:
  SeedPool(std::uint64_t master_key, std::size_t pool_size) : stream_(master_key), pool_(pool_size) {
    if (pool_size == 0) throw ConfigError("seed pool size must be >= 1");
    std::iota(pool_.begin(), pool_.end(), std::uint64_t{1});
  }

  std::vector<std::uint64_t> next_chunk_seeds(std::size_t count) {
    if (count > pool_.size()) throw ConfigError("requested more seeds than the pool holds");
    for (std::size_t i = pool_.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(stream_.below(i + 1));
      std::swap(pool_[i], pool_[j]);
    }
    ++chunk_index_;
    return {pool_.begin(), pool_.begin() + static_cast<std::ptrdiff_t>(count)};
  }

  std::size_t chunk_index() const noexcept { return chunk_index_; }
  std::span<const std::uint64_t> pool() const noexcept { return pool_; }

 private:
  SplitMix64 stream_;
  std::vector<std::uint64_t> pool_;
  std::size_t chunk_index_ = 0;
};

inline SeedPool new_pool(std::uint64_t master_key, std::size_t pool_size) { return SeedPool(master_key, pool_size); }

// Seeds for chunks 0..n_chunks-1, replayed from the master key.
inline std::vector<std::vector<std::uint64_t>> seed_schedule(const WatermarkConfig& cfg, std::size_t n_chunks,
                                                             std::size_t seeds_per_chunk) {
  SeedPool pool(cfg.master_key, cfg.pool_size);
  std::vector<std::vector<std::uint64_t>> out;
  out.reserve(n_chunks);
  for (std::size_t i = 0; i < n_chunks; ++i) out.push_back(pool.next_chunk_seeds(seeds_per_chunk));
  return out;
}

// (chunk_seed * prod(id_j + 1)) mod M, reduced stepwise. The +1 keeps token
// id 0 from collapsing every seed to zero.
inline std::uint64_t token_seed(std::span<const TokenId> prev_ids, std::uint64_t chunk_seed, std::uint64_t modulus) {
  std::uint64_t s = chunk_seed % modulus;
  for (TokenId id : prev_ids) s = mulmod(s, (static_cast<std::uint64_t>(id) + 1) % modulus, modulus);
  return s;
}

// Window-min seeding: minimum over the window of per-token keyed hashes.
inline std::uint64_t window_min_seed(std::span<const TokenId> prev_ids, std::uint64_t chunk_seed,
                                     std::uint64_t modulus) {
  std::uint64_t best = ~std::uint64_t{0};
  for (TokenId id : prev_ids) {
    const std::uint64_t v = mix64(chunk_seed ^ mix64(static_cast<std::uint64_t>(id) + 1)) % modulus;
    best = std::min(best, v);
  }
  return best;
}

// Context-free seed for the unigram scheme.
inline std::uint64_t unigram_seed(std::uint64_t chunk_seed, std::uint64_t modulus) {
  return mix64(chunk_seed ^ 0xE7037ED1A0B428DBULL) % modulus;
}

// Seed governing the green list at a position whose preceding h tokens are
// `prev_ids`, under the configured scheme.
inline std::uint64_t position_seed(std::span<const TokenId> prev_ids, std::uint64_t chunk_seed,
                                   const WatermarkConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::kUnigram: return unigram_seed(chunk_seed, cfg.modulus);
    case Scheme::kWindowMin: return window_min_seed(prev_ids, chunk_seed, cfg.modulus);
    default: return token_seed(prev_ids, chunk_seed, cfg.modulus);
  }
}

// Green iff SplitMix64(token_seed ^ mix64(token_id)) / 2^64 < gamma.
inline bool is_green(TokenId token_id, std::uint64_t seed, double gamma) noexcept {
  return to_unit(splitmix64_once(seed ^ mix64(token_id))) < gamma;
}

struct GreenCount {
  std::size_t green = 0;
  std::size_t scored = 0;
};

// Green tokens in `tokens` under `chunk_seed`. Position i is scored only if h
// tokens precede it in `preceding` followed by tokens[0..i).
//
// A repeated (window, token) pair always gets the same colour, so only its
// first occurrence is scored; otherwise looping text makes the counts
// overdispersed and the binomial null anti-conservative. The unigram scheme
// ignores the window, so there the token alone is the key. The key does not
// depend on chunk_seed, so every seed sees the same number of scored tokens.
inline GreenCount count_green(std::span<const TokenId> tokens, std::span<const TokenId> preceding,
                              std::uint64_t chunk_seed, const WatermarkConfig& cfg) {
  const auto h = static_cast<std::size_t>(cfg.h);
  GreenCount gc;
  TokenSeq window(h);
  std::set<TokenSeq> seen;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t avail = preceding.size() + i;
    if (avail < h) continue;
    for (std::size_t j = 0; j < h; ++j) {
      const std::size_t pos = avail - h + j;  // index into preceding ++ tokens
      window[j] = pos < preceding.size() ? preceding[pos] : tokens[pos - preceding.size()];
    }
    TokenSeq key = cfg.scheme == Scheme::kUnigram ? TokenSeq{} : window;
    key.push_back(tokens[i]);
    if (!seen.insert(std::move(key)).second) continue;
    ++gc.scored;
    if (is_green(tokens[i], position_seed(window, chunk_seed, cfg), cfg.gamma)) ++gc.green;
  }
  return gc;
}

}  // namespace watersearch
