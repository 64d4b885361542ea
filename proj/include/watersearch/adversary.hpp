#pragma once

// Token-level attacks: insertion, synonym substitution and deletion. Each
// attack touches exactly floor(rate * n) positions.

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "watersearch/errors.hpp"
#include "watersearch/rng.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {

enum class AttackKind { kInsert, kSynonym, kDelete };

inline AttackKind parse_attack(std::string_view s) {
  if (s == "insert") return AttackKind::kInsert;
  if (s == "synonym") return AttackKind::kSynonym;
  if (s == "delete") return AttackKind::kDelete;
  throw ConfigError("unknown attack '" + std::string(s) + "'");
}

inline std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kInsert: return "insert";
    case AttackKind::kSynonym: return "synonym";
    case AttackKind::kDelete: return "delete";
  }
  return "?";
}

class SynonymDictionary {
 public:
  void add(TokenId token, std::vector<TokenId> synonyms) {
    if (synonyms.empty()) throw ConfigError("synonym list must not be empty");
    entries_[token] = std::move(synonyms);
  }

  const std::vector<TokenId>* find(TokenId token) const {
    auto it = entries_.find(token);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<TokenId, std::vector<TokenId>>& entries() const noexcept { return entries_; }

 private:
  std::map<TokenId, std::vector<TokenId>> entries_;
};

// "token TAB syn1,syn2,..." per line; every word must be in the vocabulary.
inline SynonymDictionary read_synonyms(std::istream& is, const Vocabulary& vocab) {
  SynonymDictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError("synonym line " + std::to_string(lineno) + " has no TAB");
    std::vector<TokenId> syns;
    std::stringstream ss(line.substr(tab + 1));
    for (std::string w; std::getline(ss, w, ',');)
      if (!w.empty()) syns.push_back(vocab.id(w));
    dict.add(vocab.id(line.substr(0, tab)), std::move(syns));
  }
  return dict;
}

inline void write_synonyms(std::ostream& os, const SynonymDictionary& dict, const Vocabulary& vocab) {
  for (const auto& [tok, syns] : dict.entries()) {
    os << vocab.token(tok) << '\t';
    for (std::size_t i = 0; i < syns.size(); ++i) os << (i ? "," : "") << vocab.token(syns[i]);
    os << '\n';
  }
}

// Distributional synonyms: words that most often fill the same
// (previous, next) slot in the corpus. Keeps up to `per_token` per word.
inline SynonymDictionary build_synonyms(const std::vector<TokenSeq>& corpus, std::size_t per_token = 3) {
  std::map<std::pair<TokenId, TokenId>, std::set<TokenId>> fillers;
  for (const auto& doc : corpus)
    for (std::size_t i = 1; i + 1 < doc.size(); ++i) fillers[{doc[i - 1], doc[i + 1]}].insert(doc[i]);
  std::map<TokenId, std::map<TokenId, std::size_t>> shared;
  for (const auto& [slot, words] : fillers) {
    if (words.size() < 2 || words.size() > 64) continue;
    for (TokenId a : words)
      for (TokenId b : words)
        if (a != b) ++shared[a][b];
  }
  SynonymDictionary dict;
  for (const auto& [tok, counts] : shared) {
    std::vector<std::pair<std::size_t, TokenId>> ranked;
    for (auto [other, c] : counts) ranked.emplace_back(c, other);
    std::stable_sort(ranked.begin(), ranked.end(), [](auto& x, auto& y) { return x.first > y.first; });
    std::vector<TokenId> syns;
    for (std::size_t i = 0; i < ranked.size() && i < per_token; ++i) syns.push_back(ranked[i].second);
    dict.add(tok, std::move(syns));
  }
  return dict;
}

inline std::size_t attack_count(double rate, std::size_t n) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("attack rate must lie in [0, 1]");
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

namespace detail {

// `count` distinct positions from [0, n), uniformly, in ascending order.
inline std::vector<std::size_t> choose_positions(std::size_t n, std::size_t count, SplitMix64& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

inline TokenSeq insert_attack(const TokenSeq& tokens, double rate, std::size_t vocab_size, SplitMix64& rng) {
  if (vocab_size == 0) throw ConfigError("vocabulary size must be positive");
  const std::size_t count = attack_count(rate, tokens.size());
  TokenSeq out = tokens;
  for (std::size_t i = 0; i < count; ++i) {
    const auto tok = static_cast<TokenId>(rng.below(vocab_size));
    const auto pos = static_cast<std::ptrdiff_t>(rng.below(out.size() + 1));
    out.insert(out.begin() + pos, tok);
  }
  return out;
}

inline TokenSeq synonym_attack(const TokenSeq& tokens, double rate, const SynonymDictionary& dict, SplitMix64& rng) {
  const std::size_t count = attack_count(rate, tokens.size());
  TokenSeq out = tokens;
  for (std::size_t pos : detail::choose_positions(tokens.size(), count, rng)) {
    if (const auto* syns = dict.find(out[pos])) out[pos] = (*syns)[rng.below(syns->size())];
  }
  return out;
}

inline TokenSeq delete_attack(const TokenSeq& tokens, double rate, SplitMix64& rng) {
  const std::size_t count = attack_count(rate, tokens.size());
  if (tokens.size() - count < 1) throw InputError("deletion would leave no tokens");
  std::vector<bool> drop(tokens.size(), false);
  for (std::size_t pos : detail::choose_positions(tokens.size(), count, rng)) drop[pos] = true;
  TokenSeq out;
  out.reserve(tokens.size() - count);
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (!drop[i]) out.push_back(tokens[i]);
  return out;
}

}  // namespace watersearch
