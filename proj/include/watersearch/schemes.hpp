#pragma once

#include <span>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/keys_partition.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

struct GreenMask {
  std::vector<bool> bits;

  std::size_t size() const noexcept { return bits.size(); }
  bool operator[](std::size_t i) const { return bits[i]; }
};

inline GreenMask make_green_mask(std::uint64_t seed, double gamma, std::size_t vocab_size) {
  GreenMask m{std::vector<bool>(vocab_size)};
  for (std::size_t i = 0; i < vocab_size; ++i) m.bits[i] = is_green(static_cast<TokenId>(i), seed, gamma);
  return m;
}

// Soft-style schemes add delta to green logits; hard clamps red logits to the
// floor; none is the identity.
inline std::vector<double> apply_scheme(std::span<const double> logits, const GreenMask& mask,
                                        const WatermarkConfig& cfg) {
  if (logits.size() != mask.size()) throw InputError("logits and green mask differ in length");
  std::vector<double> out(logits.begin(), logits.end());
  switch (cfg.scheme) {
    case Scheme::kNone:
      break;
    case Scheme::kHard:
      for (std::size_t i = 0; i < out.size(); ++i)
        if (!mask[i]) out[i] = kLogitFloor;
      break;
    case Scheme::kSoft:
    case Scheme::kUnigram:
    case Scheme::kWindowMin:
      for (std::size_t i = 0; i < out.size(); ++i)
        if (mask[i]) out[i] += cfg.delta;
      break;
  }
  return out;
}

// One decoding step under the watermark keyed by `chunk_seed`.
inline TokenId watermarked_step(const TokenModel& model, std::span<const TokenId> context, std::uint64_t chunk_seed,
                                const WatermarkConfig& cfg, SplitMix64& rng) {
  auto logits = model.logits(context);
  if (cfg.scheme != Scheme::kNone) {
    if (context.size() < static_cast<std::size_t>(cfg.h))
      throw InputError("context shorter than the watermark window h");
    const auto seed = position_seed(context.last(static_cast<std::size_t>(cfg.h)), chunk_seed, cfg);
    logits = apply_scheme(logits, make_green_mask(seed, cfg.gamma, logits.size()), cfg);
  }
  const auto probs = softmax(logits);
  return sample(probs, rng);
}

}  // namespace watersearch
