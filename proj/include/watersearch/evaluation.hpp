#pragma once

// Evaluation harness: synthetic toy corpora, (generate, detect) trial fan-out,
// TPR/TNR/ROC summaries, null calibration and Kolmogorov-Smirnov checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "watersearch/adversary.hpp"
#include "watersearch/detection.hpp"
#include "watersearch/errors.hpp"
#include "watersearch/parallel.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/search_generation.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SyntheticCorpusOptions {
  std::size_t vocab_size = 1500;
  std::size_t documents = 600;
  std::size_t doc_length = 250;
  std::size_t branching = 24;  // successors per word in the generating chain
  double zipf = 1.1;
  std::uint64_t seed = 7;
};

// Distinct lowercase pseudo-words built from syllables.
inline std::vector<std::string> pseudo_words(std::size_t count, std::uint64_t seed) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                            "br", "st", "tr", "pl", "ch", "sh"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ea", "ou"};
  SplitMix64 rng(seed);
  std::vector<std::string> out;
  std::set<std::string> seen;
  while (out.size() < count) {
    const std::size_t syllables = 1 + rng.below(3);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    if (rng.below(3) == 0) w += kOnsets[rng.below(14)];
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

// Documents sampled from a sparse first-order chain with Zipfian successor
// weights; one document per line.
inline std::vector<std::string> synthetic_corpus(const SyntheticCorpusOptions& o) {
  if (o.vocab_size < 2 || o.branching < 1 || o.doc_length < 1) throw ConfigError("bad synthetic corpus options");
  const auto words = pseudo_words(o.vocab_size, o.seed);
  SplitMix64 rng(mix64(o.seed) ^ 0xC0FFEE);

  std::vector<double> zipf_cdf(o.vocab_size);
  double acc = 0.0;
  for (std::size_t r = 0; r < o.vocab_size; ++r) zipf_cdf[r] = (acc += std::pow(static_cast<double>(r + 1), -o.zipf));
  for (double& c : zipf_cdf) c /= acc;
  auto draw_word = [&] {
    const double u = rng.uniform();
    return static_cast<std::size_t>(std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u) - zipf_cdf.begin());
  };

  std::vector<std::vector<std::size_t>> succ(o.vocab_size);
  std::vector<double> succ_cdf(o.branching);
  acc = 0.0;
  for (std::size_t r = 0; r < o.branching; ++r) succ_cdf[r] = (acc += 1.0 / static_cast<double>(r + 1));
  for (double& c : succ_cdf) c /= acc;
  for (auto& s : succ)
    for (std::size_t r = 0; r < o.branching; ++r) s.push_back(std::min(draw_word(), o.vocab_size - 1));

  std::vector<std::string> docs;
  docs.reserve(o.documents);
  for (std::size_t d = 0; d < o.documents; ++d) {
    std::size_t w = std::min(draw_word(), o.vocab_size - 1);
    std::string line = words[w];
    for (std::size_t t = 1; t < o.doc_length; ++t) {
      const double u = rng.uniform();
      const auto r = static_cast<std::size_t>(std::lower_bound(succ_cdf.begin(), succ_cdf.end(), u) - succ_cdf.begin());
      w = succ[w][std::min(r, o.branching - 1)];
      line += ' ';
      line += words[w];
    }
    docs.push_back(std::move(line));
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Goodness of fit

struct KsResult {
  double d = 0.0;           // sup |F_n(x) - x|
  double d_excess = 0.0;    // sup (F_n(x) - x): too many small values
  double p_two_sided = 1.0;
  double p_excess = 1.0;    // one-sided: H1 = samples stochastically smaller than uniform
};

// Kolmogorov-Smirnov against Uniform(0, 1), Stephens' small-sample scaling.
inline KsResult ks_uniform(std::vector<double> x) {
  if (x.empty()) throw InputError("KS test needs samples");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  KsResult r;
  double d_minus = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = std::clamp(x[i], 0.0, 1.0);
    r.d_excess = std::max(r.d_excess, static_cast<double>(i + 1) / n - u);
    d_minus = std::max(d_minus, u - static_cast<double>(i) / n);
  }
  r.d = std::max(r.d_excess, d_minus);
  const double scale = std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n);
  const double lam = scale * r.d;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lam * lam);
  r.p_two_sided = lam < 0.2 ? 1.0 : std::clamp(q, 0.0, 1.0);
  const double le = scale * r.d_excess;
  r.p_excess = std::clamp(std::exp(-2.0 * le * le), 0.0, 1.0);
  return r;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Positives are flagged when p <= threshold. Sweeps every distinct observed
// p-value; the curve starts at (0, 0) and ends at (1, 1).
inline std::vector<RocPoint> roc_curve(const std::vector<double>& positive_p, const std::vector<double>& negative_p) {
  std::vector<double> cuts(positive_p);
  cuts.insert(cuts.end(), negative_p.begin(), negative_p.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto rate = [](const std::vector<double>& v, double t) {
    if (v.empty()) return 0.0;
    return static_cast<double>(std::count_if(v.begin(), v.end(), [t](double p) { return p <= t; })) /
           static_cast<double>(v.size());
  };
  std::vector<RocPoint> roc{{0.0, 0.0, 0.0}};
  for (double t : cuts) roc.push_back({rate(negative_p, t), rate(positive_p, t), t});
  if (roc.back().fpr < 1.0 || roc.back().tpr < 1.0) roc.push_back({1.0, 1.0, 1.0});
  return roc;
}

inline double roc_auc(const std::vector<RocPoint>& roc) {
  double auc = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i)
    auc += (roc[i].fpr - roc[i - 1].fpr) * 0.5 * (roc[i].tpr + roc[i - 1].tpr);
  return auc;
}

// ---------------------------------------------------------------------------
// Trials

enum class Method { kWaterSearch, kKgwBaseline };

struct AttackSpec {
  AttackKind kind = AttackKind::kInsert;
  double rate = 0.0;
  const SynonymDictionary* synonyms = nullptr;
};

struct EvalConfig {
  Method method = Method::kWaterSearch;
  WatermarkConfig watermark;
  SearchConfig search;
  std::optional<AttackSpec> attack;
  std::size_t trials = 100;
  double threshold = kDefaultThreshold;
  bool use_prompt = true;
  std::uint64_t rng_seed = 1;
};

struct TrialOutcome {
  double p_value = 1.0;
  double green_fraction = 0.0;
  double similarity = 0.0;
  std::size_t tokens = 0;
};

struct EvalResult {
  EvalConfig config;
  std::vector<TrialOutcome> watermarked;
  std::vector<TrialOutcome> clean;
  double tpr = 0.0;
  double tnr = 0.0;
  double median_p = 1.0;  // over watermarked texts
  double mean_green_fraction = 0.0;
  double mean_similarity = 0.0;
  double auc = 0.0;
  double ms_per_1k_tokens = 0.0;
  std::vector<RocPoint> roc;
};

inline TokenSeq apply_attack(const TokenSeq& tokens, const AttackSpec& a, std::size_t vocab_size, SplitMix64& rng) {
  switch (a.kind) {
    case AttackKind::kInsert: return insert_attack(tokens, a.rate, vocab_size, rng);
    case AttackKind::kSynonym:
      if (!a.synonyms) throw ConfigError("synonym attack needs a dictionary");
      return synonym_attack(tokens, a.rate, *a.synonyms, rng);
    case AttackKind::kDelete: return delete_attack(tokens, a.rate, rng);
  }
  return tokens;
}

// Detection p-value of `tokens` under the method's own detector.
inline double detect_pvalue(const TokenSeq& tokens, const TokenSeq& prompt, const EvalConfig& cfg,
                            const SeedSchedule* schedule) {
  if (tokens.empty()) return 1.0;
  std::optional<std::span<const TokenId>> pre;
  if (cfg.use_prompt) pre = std::span<const TokenId>(prompt);
  if (cfg.method == Method::kKgwBaseline) {
    std::span<const TokenId> ctx = pre ? *pre : std::span<const TokenId>{};
    if (ctx.size() + tokens.size() <= static_cast<std::size_t>(cfg.watermark.h)) return 1.0;
    return normal_sf(baseline_zscore(tokens, pre, cfg.watermark));
  }
  return detect_document(tokens, pre, cfg.watermark, cfg.search, cfg.threshold, schedule).doc_p_value;
}

// Runs `trials` watermarked and `trials` clean generations over the prompts
// (round-robin) and scores both sets. Trial i only depends on (rng_seed, i),
// so results are independent of `threads`.
inline EvalResult evaluate(const TokenModel& model, const std::vector<TokenSeq>& prompts, const EvalConfig& cfg,
                           unsigned threads = 1) {
  if (prompts.empty()) throw InputError("evaluation needs at least one prompt");
  if (cfg.trials == 0) throw ConfigError("trials must be >= 1");
  cfg.watermark.validate();
  cfg.search.validate();
  const std::size_t n_chunks = (cfg.search.max_tokens * 2 + cfg.search.chunk_size - 1) / cfg.search.chunk_size + 1;
  const auto schedule = seed_schedule(cfg.watermark, n_chunks, cfg.search.candidates());

  EvalResult res;
  res.config = cfg;
  res.watermarked.resize(cfg.trials);
  res.clean.resize(cfg.trials);
  std::vector<double> gen_seconds(cfg.trials, 0.0);
  std::vector<std::size_t> gen_tokens(cfg.trials, 0);

  parallel_for(cfg.trials, threads, [&](std::size_t i) {
    const TokenSeq& prompt = prompts[i % prompts.size()];
    const std::uint64_t seed = substream(cfg.rng_seed, i, 17).next();
    TrialOutcome wm, clean;

    const auto t0 = std::chrono::steady_clock::now();
    TokenSeq out;
    if (cfg.method == Method::kWaterSearch) {
      const auto trace = watersearch_generate(model, prompt, cfg.watermark, cfg.search, seed);
      out = trace.output();
      double gf = 0.0, sim = 0.0;
      for (const auto& c : trace.chunks) {
        gf += c.scores[c.chosen].green_fraction;
        sim += c.scores[c.chosen].similarity;
      }
      if (!trace.chunks.empty()) {
        wm.green_fraction = gf / static_cast<double>(trace.chunks.size());
        wm.similarity = sim / static_cast<double>(trace.chunks.size());
      }
    } else {
      out = kgw_generate(model, prompt, cfg.watermark, cfg.search.max_tokens, seed);
      const auto gc = count_green(out, prompt, cfg.watermark.master_key, cfg.watermark);
      wm.green_fraction = gc.scored ? static_cast<double>(gc.green) / static_cast<double>(gc.scored) : 0.0;
      const auto ref = plain_generate(model, prompt, cfg.search.max_tokens, seed);
      wm.similarity = similarity(ref, out, cfg.search.similarity);
    }
    gen_seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    gen_tokens[i] = out.size();

    if (cfg.attack) {
      auto arng = substream(seed, 0xA77AC4, 1);
      out = apply_attack(out, *cfg.attack, model.vocab().size(), arng);
    }
    wm.tokens = out.size();
    wm.p_value = detect_pvalue(out, prompt, cfg, &schedule);

    const auto plain = plain_generate(model, prompt, cfg.search.max_tokens, seed ^ 0x5EED);
    clean.tokens = plain.size();
    clean.p_value = detect_pvalue(plain, prompt, cfg, &schedule);
    clean.green_fraction = 0.0;

    res.watermarked[i] = wm;
    res.clean[i] = clean;
  });

  std::vector<double> pw, pc;
  double gf = 0.0, sim = 0.0, secs = 0.0;
  std::size_t toks = 0;
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    pw.push_back(res.watermarked[i].p_value);
    pc.push_back(res.clean[i].p_value);
    gf += res.watermarked[i].green_fraction;
    sim += res.watermarked[i].similarity;
    secs += gen_seconds[i];
    toks += gen_tokens[i];
  }
  const double n = static_cast<double>(cfg.trials);
  res.tpr = static_cast<double>(std::count_if(pw.begin(), pw.end(), [&](double p) { return p < cfg.threshold; })) / n;
  res.tnr = static_cast<double>(std::count_if(pc.begin(), pc.end(), [&](double p) { return p >= cfg.threshold; })) / n;
  res.median_p = median(pw);
  res.mean_green_fraction = gf / n;
  res.mean_similarity = sim / n;
  res.roc = roc_curve(pw, pc);
  res.auc = roc_auc(res.roc);
  res.ms_per_1k_tokens = toks ? 1e6 * secs / static_cast<double>(toks) : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Null calibration

struct NullSimConfig {
  std::size_t trials = 10000;
  std::size_t doc_length = 200;
  std::size_t vocab_size = 1000;
  WatermarkConfig watermark;
  SearchConfig search;
  bool use_prompt = false;
  std::uint64_t rng_seed = 1;
};

// Document p-values of uniformly random token sequences.
inline std::vector<double> simulate_null(const NullSimConfig& cfg, unsigned threads = 1) {
  cfg.watermark.validate();
  cfg.search.validate();
  if (cfg.doc_length == 0 || cfg.vocab_size < 2) throw ConfigError("null simulation needs tokens and a vocabulary");
  const std::size_t n_chunks = (cfg.doc_length + cfg.search.chunk_size - 1) / cfg.search.chunk_size;
  const auto schedule = seed_schedule(cfg.watermark, n_chunks, cfg.search.candidates());
  const auto h = static_cast<std::size_t>(cfg.watermark.h);
  std::vector<double> out(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::size_t i) {
    auto rng = substream(cfg.rng_seed, i, 99);
    TokenSeq prompt(cfg.use_prompt ? h : 0), doc(cfg.doc_length);
    for (auto& t : prompt) t = static_cast<TokenId>(rng.below(cfg.vocab_size));
    for (auto& t : doc) t = static_cast<TokenId>(rng.below(cfg.vocab_size));
    std::optional<std::span<const TokenId>> pre;
    if (cfg.use_prompt) pre = std::span<const TokenId>(prompt);
    out[i] = detect_document(doc, pre, cfg.watermark, cfg.search, kDefaultThreshold, &schedule).doc_p_value;
  });
  return out;
}

}  // namespace watersearch
