#pragma once

// Next-token distribution providers: vocabulary and tokenizer, the abstract
// TokenModel contract (logits over a fixed vocabulary given a context), an
// add-k smoothed n-gram model and a scripted mock, plus softmax/sampling.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/rng.hpp"

namespace watersearch {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Logit assigned to tokens that must never be sampled. Finite so that
// adding a watermark bias never produces NaN.
inline constexpr double kLogitFloor = -1e9;

// Whitespace split, lowercased. Shared by the model, the metrics and the
// attacks so that every module agrees on token identity.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string detokenize(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.size() < 2) throw ConfigError("vocabulary needs at least 2 tokens");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw ConfigError("vocabulary contains an empty token");
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
        throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const {
    check(id);
    return tokens_[id];
  }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<TokenId> find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(std::string_view word) const {
    auto found = find(word);
    if (!found) throw InputError("token '" + std::string(word) + "' is not in the vocabulary");
    return *found;
  }

  void check(TokenId id) const {
    if (id >= tokens_.size())
      throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(tokens_.size()));
  }

  TokenSeq encode(std::string_view text) const {
    TokenSeq ids;
    for (const auto& w : tokenize(text)) ids.push_back(id(w));
    return ids;
  }

  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out.push_back(' ');
      out += token(ids[i]);
    }
    return out;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InputError("softmax of an empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += (p[i] = std::exp(logits[i] - mx));
  for (double& x : p) x /= total;
  return p;
}

// Greedy decoding: argmax with lowest-index tie-break.
inline TokenId greedy(std::span<const double> probs) {
  if (probs.empty()) throw InputError("greedy over an empty vector");
  return static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// Inverse-CDF draw from `probs` using one 53-bit uniform from `rng`.
inline TokenId sample(std::span<const double> probs, SplitMix64& rng) {
  if (probs.empty()) throw InputError("sample from an empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InputError("negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("probabilities do not sum to 1");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

// Provider of next-token logits over a fixed vocabulary. Implementations are
// immutable after construction and may be queried from many threads.
class TokenModel {
 public:
  virtual ~TokenModel() = default;
  virtual const Vocabulary& vocab() const = 0;
  virtual std::vector<double> logits(std::span<const TokenId> context) const = 0;
  // End-of-sequence token, if the model has one.
  virtual std::optional<TokenId> eos() const { return std::nullopt; }

  std::vector<double> probabilities(std::span<const TokenId> context) const {
    auto l = logits(context);
    return softmax(l);
  }

 protected:
  void check_context(std::span<const TokenId> context) const {
    for (TokenId id : context) vocab().check(id);
  }
};

// Add-k smoothed n-gram model; `order` is the number of context tokens.
class NGramModel final : public TokenModel {
 public:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
  };
  using CountTable = std::map<TokenSeq, ContextCounts>;

  NGramModel(Vocabulary vocab, int order, double smoothing_k, CountTable counts,
             std::optional<TokenId> eos = std::nullopt)
      : vocab_(std::move(vocab)), order_(order), k_(smoothing_k), counts_(std::move(counts)), eos_(eos) {
    if (order_ < 1) throw ConfigError("n-gram order must be >= 1");
    if (!(k_ >= 0.0) || !std::isfinite(k_)) throw ConfigError("smoothing_k must be a finite value >= 0");
    if (eos_) vocab_.check(*eos_);
    for (auto& [ctx, cc] : counts_) {
      if (ctx.size() != static_cast<std::size_t>(order_)) throw ConfigError("count context has wrong length");
      std::uint64_t sum = 0;
      for (TokenId id : ctx) vocab_.check(id);
      for (auto [id, c] : cc.next) vocab_.check(id), sum += c;
      cc.total = sum;
    }
  }

  const Vocabulary& vocab() const override { return vocab_; }
  std::optional<TokenId> eos() const override { return eos_; }
  int order() const noexcept { return order_; }
  double smoothing_k() const noexcept { return k_; }
  const CountTable& counts() const noexcept { return counts_; }

  // Smoothed conditional distribution (count + k) / (total + k |V|). Contexts
  // shorter than the order, or never observed, are uniform when k > 0.
  std::vector<double> conditional(std::span<const TokenId> context) const {
    check_context(context);
    const std::size_t v = vocab_.size();
    const ContextCounts* cc = lookup(context);
    const double total = cc ? static_cast<double>(cc->total) : 0.0;
    const double denom = total + k_ * static_cast<double>(v);
    if (denom <= 0.0) return std::vector<double>(v, 1.0 / static_cast<double>(v));
    std::vector<double> p(v, k_ / denom);
    if (cc)
      for (auto [id, c] : cc->next) p[id] = (static_cast<double>(c) + k_) / denom;
    return p;
  }

  std::vector<double> logits(std::span<const TokenId> context) const override {
    auto p = conditional(context);
    for (double& x : p) x = x > 0.0 ? std::log(x) : kLogitFloor;
    return p;
  }

 private:
  const ContextCounts* lookup(std::span<const TokenId> context) const {
    if (context.size() < static_cast<std::size_t>(order_)) return nullptr;
    TokenSeq key(context.end() - order_, context.end());
    auto it = counts_.find(key);
    return it == counts_.end() ? nullptr : &it->second;
  }

  Vocabulary vocab_;
  int order_;
  double k_;
  CountTable counts_;
  std::optional<TokenId> eos_;
};

struct NGramTrainOptions {
  int order = 2;
  double smoothing_k = 0.001;
  // When set, this token is appended to every document and becomes the model's
  // end-of-sequence token.
  std::optional<std::string> eos_token;
};

// Trains on pre-tokenized documents. The vocabulary is the sorted set of
// corpus tokens (plus the eos token), so ids are stable for a given corpus.
inline NGramModel train_ngram(const std::vector<std::vector<std::string>>& corpus,
                              const NGramTrainOptions& opts) {
  if (opts.order < 1) throw ConfigError("n-gram order must be >= 1");
  if (!(opts.smoothing_k >= 0.0)) throw ConfigError("smoothing_k must be >= 0");
  std::size_t n_tokens = 0;
  for (const auto& doc : corpus) n_tokens += doc.size();
  if (n_tokens == 0) throw TrainingError("training corpus is empty");

  std::vector<std::string> words;
  for (const auto& doc : corpus) words.insert(words.end(), doc.begin(), doc.end());
  if (opts.eos_token) words.push_back(*opts.eos_token);
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  if (words.size() < 2) {
    // A single-word corpus still needs a second symbol for a valid vocabulary.
    words.push_back(words.front() == "<unk>" ? "<unk2>" : "<unk>");
    std::sort(words.begin(), words.end());
  }
  Vocabulary vocab(words);

  NGramModel::CountTable counts;
  const auto order = static_cast<std::size_t>(opts.order);
  for (const auto& doc : corpus) {
    TokenSeq ids;
    ids.reserve(doc.size() + 1);
    for (const auto& w : doc) ids.push_back(vocab.id(w));
    if (opts.eos_token) ids.push_back(vocab.id(*opts.eos_token));
    for (std::size_t i = order; i < ids.size(); ++i) {
      TokenSeq ctx(ids.begin() + static_cast<std::ptrdiff_t>(i - order), ids.begin() + static_cast<std::ptrdiff_t>(i));
      ++counts[std::move(ctx)].next[ids[i]];
    }
  }
  std::optional<TokenId> eos;
  if (opts.eos_token) eos = vocab.id(*opts.eos_token);
  return NGramModel(std::move(vocab), opts.order, opts.smoothing_k, std::move(counts), eos);
}

inline NGramModel train_ngram(const std::vector<std::string>& lines, const NGramTrainOptions& opts) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(lines.size());
  for (const auto& l : lines) docs.push_back(tokenize(l));
  return train_ngram(docs, opts);
}

// Line-oriented model file:
//   watersearch-ngram 1
//   order <int>
//   smoothing_k <real>
//   eos <token>|-
//   vocab <N>
//   <token>            (N lines, id = line index)
//   counts <lines>
//   <ctx ids space-separated> TAB <token id> TAB <count>
inline void write_model(std::ostream& os, const NGramModel& m) {
  os << "watersearch-ngram 1\n";
  os << "order " << m.order() << '\n';
  os << "smoothing_k " << std::setprecision(17) << m.smoothing_k() << '\n';
  os << "eos " << (m.eos() ? m.vocab().token(*m.eos()) : std::string("-")) << '\n';
  os << "vocab " << m.vocab().size() << '\n';
  for (const auto& t : m.vocab().tokens()) os << t << '\n';
  std::size_t lines = 0;
  for (const auto& [ctx, cc] : m.counts()) lines += cc.next.size();
  os << "counts " << lines << '\n';
  for (const auto& [ctx, cc] : m.counts()) {
    for (auto [id, c] : cc.next) {
      for (std::size_t i = 0; i < ctx.size(); ++i) os << (i ? " " : "") << ctx[i];
      os << '\t' << id << '\t' << c << '\n';
    }
  }
}

inline NGramModel read_model(std::istream& is) {
  auto fail = [](const std::string& why) -> TrainingError { return TrainingError("bad model file: " + why); };
  std::string line, key;
  auto expect = [&](const char* want) {
    if (!std::getline(is, line)) throw fail(std::string("missing '") + want + "'");
    std::istringstream ls(line);
    ls >> key;
    if (key != want) throw fail(std::string("expected '") + want + "', got '" + key + "'");
    std::string rest;
    std::getline(ls >> std::ws, rest);
    return rest;
  };
  if (expect("watersearch-ngram") != "1") throw fail("unsupported version");
  const int order = std::stoi(expect("order"));
  const double k = std::stod(expect("smoothing_k"));
  const std::string eos_name = expect("eos");
  const std::size_t n = std::stoul(expect("vocab"));
  std::vector<std::string> toks(n);
  for (auto& t : toks)
    if (!std::getline(is, t)) throw fail("truncated vocabulary");
  Vocabulary vocab(std::move(toks));
  const std::size_t lines = std::stoul(expect("counts"));
  NGramModel::CountTable counts;
  for (std::size_t i = 0; i < lines; ++i) {
    if (!std::getline(is, line)) throw fail("truncated counts");
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw fail("malformed count line");
    TokenSeq ctx;
    std::istringstream cs(line.substr(0, t1));
    for (unsigned long x; cs >> x;) ctx.push_back(static_cast<TokenId>(x));
    const auto id = static_cast<TokenId>(std::stoul(line.substr(t1 + 1, t2 - t1 - 1)));
    const std::uint64_t c = std::stoull(line.substr(t2 + 1));
    counts[std::move(ctx)].next[id] = c;
  }
  std::optional<TokenId> eos;
  if (eos_name != "-") eos = vocab.id(eos_name);
  return NGramModel(std::move(vocab), order, k, std::move(counts), eos);
}

// Deterministic mock: explicit logit vectors keyed by the last `window`
// context tokens (window 0 keys on the full context). Unscripted contexts
// fall back to `fallback` logits.
class ScriptedModel final : public TokenModel {
 public:
  ScriptedModel(Vocabulary vocab, std::size_t window, std::vector<double> fallback)
      : vocab_(std::move(vocab)), window_(window), fallback_(std::move(fallback)) {
    check_length(fallback_);
  }

  // Uniform fallback.
  ScriptedModel(Vocabulary vocab, std::size_t window)
      : ScriptedModel(vocab, window, std::vector<double>(vocab.size(), 0.0)) {}

  void set(const TokenSeq& context_tail, std::vector<double> logits) {
    check_length(logits);
    script_[key(context_tail)] = std::move(logits);
  }

  void set_eos(TokenId id) {
    vocab_.check(id);
    eos_ = id;
  }

  const Vocabulary& vocab() const override { return vocab_; }
  std::optional<TokenId> eos() const override { return eos_; }

  std::vector<double> logits(std::span<const TokenId> context) const override {
    check_context(context);
    auto it = script_.find(key(context));
    return it == script_.end() ? fallback_ : it->second;
  }

 private:
  void check_length(const std::vector<double>& l) const {
    if (l.size() != vocab_.size()) throw ConfigError("scripted logit vector length differs from vocabulary size");
  }

  std::uint64_t key(std::span<const TokenId> context) const {
    auto tail = context;
    if (window_ > 0 && tail.size() > window_) tail = tail.last(window_);
    std::uint64_t h = mix64(tail.size());
    for (TokenId id : tail) h = mix64(h ^ (static_cast<std::uint64_t>(id) + kGoldenGamma));
    return h;
  }

  Vocabulary vocab_;
  std::size_t window_;
  std::vector<double> fallback_;
  std::unordered_map<std::uint64_t, std::vector<double>> script_;
  std::optional<TokenId> eos_;
};

}  // namespace watersearch
