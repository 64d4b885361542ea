#include <sstream>

#include <gtest/gtest.h>

#include "watersearch/adversary.hpp"
#include "watersearch/evaluation.hpp"

namespace watersearch {
namespace {

TokenSeq Range(std::size_t n) {
  TokenSeq t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<TokenId>(i % 50);
  return t;
}

TEST(AttackCount, FloorRule) {
  EXPECT_EQ(attack_count(0.5, 100), 50u);
  EXPECT_EQ(attack_count(0.3, 100), 30u);
  EXPECT_EQ(attack_count(0.29, 100), 29u);  // 28.999999999999996 in binary
  EXPECT_EQ(attack_count(0.3, 7), 2u);
  EXPECT_EQ(attack_count(1.0, 9), 9u);
  EXPECT_THROW(attack_count(-0.1, 5), ConfigError);
  EXPECT_THROW(attack_count(1.1, 5), ConfigError);
}

TEST(Insert, LengthAndIdentity) {
  SplitMix64 rng(1);
  const auto t = Range(100);
  EXPECT_EQ(insert_attack(t, 0.0, 1000, rng), t);
  EXPECT_EQ(insert_attack(t, 0.5, 1000, rng).size(), 150u);
  EXPECT_EQ(insert_attack(t, 0.3, 1000, rng).size(), 130u);
}

TEST(Insert, OriginalIsASubsequenceAndTokensStayInVocabulary) {
  SplitMix64 rng(2);
  const auto t = Range(80);
  const auto out = insert_attack(t, 0.8, 60, rng);
  std::size_t j = 0;
  for (TokenId x : out) {
    ASSERT_LT(x, 60u);
    if (j < t.size() && x == t[j]) ++j;
  }
  EXPECT_EQ(j, t.size());
}

TEST(Insert, Reproducible) {
  SplitMix64 a(7), b(7);
  EXPECT_EQ(insert_attack(Range(100), 0.4, 500, a), insert_attack(Range(100), 0.4, 500, b));
}

TEST(Synonym, IdentityAndAbsentTokens) {
  SynonymDictionary dict;
  dict.add(3, {40});
  SplitMix64 rng(3);
  const auto t = Range(100);
  EXPECT_EQ(synonym_attack(t, 0.0, dict, rng), t);
  const TokenSeq no_entry{1, 2, 4, 5};
  EXPECT_EQ(synonym_attack(no_entry, 1.0, dict, rng), no_entry);
}

TEST(Synonym, FullRateWithFixedMapSubstitutesEverything) {
  SynonymDictionary dict;
  for (TokenId i = 0; i < 50; ++i) dict.add(i, {static_cast<TokenId>(100 + i)});
  SplitMix64 rng(4);
  const auto t = Range(60);
  const auto out = synonym_attack(t, 1.0, dict, rng);
  ASSERT_EQ(out.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(out[i], t[i] + 100);
}

TEST(Synonym, ChangesAtMostTheSelectedCount) {
  SynonymDictionary dict;
  for (TokenId i = 0; i < 50; ++i) dict.add(i, {static_cast<TokenId>(100 + i)});
  SplitMix64 rng(5);
  const auto t = Range(100);
  const auto out = synonym_attack(t, 0.3, dict, rng);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < t.size(); ++i) changed += out[i] != t[i];
  EXPECT_EQ(changed, 30u);
}

TEST(Delete, LengthReproducibilityAndError) {
  SplitMix64 rng(6);
  const auto t = Range(100);
  EXPECT_EQ(delete_attack(t, 0.0, rng), t);
  EXPECT_EQ(delete_attack(t, 0.3, rng).size(), 70u);
  SplitMix64 a(9), b(9);
  EXPECT_EQ(delete_attack(t, 0.5, a), delete_attack(t, 0.5, b));
  EXPECT_THROW(delete_attack(t, 1.0, rng), InputError);
  EXPECT_THROW(delete_attack(TokenSeq{}, 0.0, rng), InputError);
}

TEST(Dictionary, FileRoundTripAndErrors) {
  Vocabulary v({"big", "large", "huge", "cat"});
  std::istringstream in("# comment\nbig\tlarge,huge\nlarge\tbig\n");
  const auto d = read_synonyms(in, v);
  EXPECT_EQ(d.size(), 2u);
  ASSERT_NE(d.find(0), nullptr);
  EXPECT_EQ(*d.find(0), (std::vector<TokenId>{1, 2}));
  EXPECT_EQ(d.find(3), nullptr);
  std::ostringstream out;
  write_synonyms(out, d, v);
  EXPECT_EQ(out.str(), "big\tlarge,huge\nlarge\tbig\n");

  std::istringstream no_tab("big large\n");
  EXPECT_THROW(read_synonyms(no_tab, v), InputError);
  std::istringstream oov("big\tenormous\n");
  EXPECT_THROW(read_synonyms(oov, v), InputError);
  std::istringstream empty_list("big\t\n");
  EXPECT_THROW(read_synonyms(empty_list, v), ConfigError);
}

TEST(Dictionary, BuiltFromCorpusSharesContexts) {
  // "a X b" with X in {p, q, r}: p, q and r are mutual synonyms.
  const std::vector<TokenSeq> corpus{{0, 3, 1}, {0, 4, 1}, {0, 5, 1}, {2, 2, 2}};
  const auto d = build_synonyms(corpus);
  ASSERT_NE(d.find(3), nullptr);
  EXPECT_EQ(*d.find(3), (std::vector<TokenId>{4, 5}));
  EXPECT_EQ(d.find(0), nullptr);
  for (const auto& [tok, syns] : d.entries()) {
    EXPECT_FALSE(syns.empty());
    for (TokenId s : syns) EXPECT_NE(s, tok);
  }
}

TEST(AttackKind, Parsing) {
  EXPECT_EQ(parse_attack("insert"), AttackKind::kInsert);
  EXPECT_EQ(parse_attack("synonym"), AttackKind::kSynonym);
  EXPECT_EQ(parse_attack("delete"), AttackKind::kDelete);
  EXPECT_THROW(parse_attack("paraphrase"), ConfigError);
  EXPECT_EQ(to_string(AttackKind::kSynonym), "synonym");
}

}  // namespace
}  // namespace watersearch
