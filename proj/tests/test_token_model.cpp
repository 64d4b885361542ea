#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "watersearch/evaluation.hpp"
#include "watersearch/token_model.hpp"

namespace watersearch {
namespace {

NGramModel Train(const std::vector<std::string>& lines, int order, double k) {
  NGramTrainOptions o;
  o.order = order;
  o.smoothing_k = k;
  return train_ngram(lines, o);
}

TEST(Tokenizer, SplitsOnWhitespaceAndLowercases) {
  const auto t = tokenize("  The CAT\tsat\n on ");
  EXPECT_EQ(t, (std::vector<std::string>{"the", "cat", "sat", "on"}));
  EXPECT_EQ(detokenize(t), "the cat sat on");
}

TEST(Vocabulary, RejectsDuplicatesAndTinyVocabularies) {
  EXPECT_THROW(Vocabulary({"a"}), ConfigError);
  EXPECT_THROW(Vocabulary({"a", "b", "a"}), ConfigError);
  Vocabulary v({"a", "b"});
  EXPECT_EQ(v.id("b"), 1u);
  EXPECT_THROW(v.id("zzz"), InputError);
  EXPECT_THROW(v.check(2), InputError);
}

TEST(NGram, BigramCountsWithAddOneSmoothing) {
  const auto m = Train({"a b a b"}, 1, 1.0);
  ASSERT_EQ(m.vocab().size(), 2u);
  const TokenSeq ctx{m.vocab().id("a")};
  const auto p = m.conditional(ctx);
  EXPECT_DOUBLE_EQ(p[m.vocab().id("b")], 0.75);
  EXPECT_DOUBLE_EQ(p[m.vocab().id("a")], 0.25);
}

TEST(NGram, UnseenContextIsUniform) {
  const auto m = Train({"a b c a b c"}, 2, 0.5);
  const TokenSeq ctx{m.vocab().id("c"), m.vocab().id("c")};
  for (double p : m.conditional(ctx)) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  // Shorter-than-order context behaves as unseen.
  for (double p : m.conditional(TokenSeq{0})) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(NGram, SingleOutcomeCorpusIsDegenerate) {
  const auto m = Train({"a a a"}, 1, 0.0);
  const TokenSeq ctx{m.vocab().id("a")};
  const auto p = m.conditional(ctx);
  EXPECT_DOUBLE_EQ(p[m.vocab().id("a")], 1.0);
  const auto l = m.logits(ctx);
  // Zero-probability tokens get the finite floor, not -inf.
  for (std::size_t i = 0; i < l.size(); ++i)
    if (i != m.vocab().id("a")) {
      EXPECT_EQ(l[i], kLogitFloor);
    }
  EXPECT_DOUBLE_EQ(softmax(l)[m.vocab().id("a")], 1.0);
}

TEST(NGram, TrainingErrors) {
  EXPECT_THROW(Train({}, 1, 1.0), TrainingError);
  EXPECT_THROW(Train({"", "   "}, 1, 1.0), TrainingError);
  EXPECT_THROW(Train({"a b"}, 0, 1.0), ConfigError);
  EXPECT_THROW(Train({"a b"}, 1, -1.0), ConfigError);
}

TEST(NGram, InvalidContextIdIsAnInputError) {
  const auto m = Train({"a b a b"}, 1, 1.0);
  EXPECT_THROW(m.logits(TokenSeq{7}), InputError);
}

TEST(NGram, SoftmaxOfLogitsRecoversProbabilities) {
  const auto m = Train({"a b a b"}, 1, 1.0);
  const TokenSeq ctx{m.vocab().id("a")};
  const auto p = softmax(m.logits(ctx));
  EXPECT_NEAR(p[m.vocab().id("b")], 0.75, 1e-15);
  EXPECT_NEAR(p[m.vocab().id("a")], 0.25, 1e-15);
}

TEST(NGram, EveryContextYieldsAValidDistribution) {
  SyntheticCorpusOptions o;
  o.vocab_size = 300;
  o.documents = 50;
  o.doc_length = 80;
  const auto lines = synthetic_corpus(o);
  const auto m = Train(lines, 2, 0.01);
  SplitMix64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    TokenSeq ctx(1 + rng.below(4));
    for (auto& t : ctx) t = static_cast<TokenId>(rng.below(m.vocab().size()));
    const auto p = softmax(m.logits(ctx));
    double sum = 0.0;
    for (double x : p) {
      ASSERT_GE(x, 0.0);
      sum += x;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(NGram, TrainingIsDeterministicAndFileRoundTrips) {
  SyntheticCorpusOptions o;
  o.vocab_size = 200;
  o.documents = 30;
  o.doc_length = 50;
  const auto lines = synthetic_corpus(o);
  std::ostringstream a, b;
  write_model(a, Train(lines, 2, 0.25));
  write_model(b, Train(lines, 2, 0.25));
  EXPECT_EQ(a.str(), b.str());

  std::istringstream in(a.str());
  const auto back = read_model(in);
  std::ostringstream c;
  write_model(c, back);
  EXPECT_EQ(a.str(), c.str());
}

TEST(NGram, EosTokenIsAppendedAndReported) {
  NGramTrainOptions o;
  o.order = 1;
  o.smoothing_k = 0.0;
  o.eos_token = "</s>";
  const auto m = train_ngram(std::vector<std::string>{"x y"}, o);
  ASSERT_TRUE(m.eos().has_value());
  const auto p = m.conditional(TokenSeq{m.vocab().id("y")});
  EXPECT_DOUBLE_EQ(p[*m.eos()], 1.0);
}

TEST(NGram, MalformedModelFileIsRejected) {
  std::istringstream in("watersearch-ngram 2\n");
  EXPECT_THROW(read_model(in), TrainingError);
  std::istringstream trunc("watersearch-ngram 1\norder 1\nsmoothing_k 1\neos -\nvocab 3\na\nb\n");
  EXPECT_THROW(read_model(trunc), TrainingError);
}

TEST(ScriptedModel, UniformLogitsGiveUniformProbabilities) {
  ScriptedModel m(Vocabulary({"x", "y"}), 1, {0.0, 0.0});
  const auto p = m.probabilities(TokenSeq{0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(ScriptedModel, ScriptedContextsOverrideFallback) {
  ScriptedModel m(Vocabulary({"x", "y", "z"}), 1);
  m.set({1}, {0.0, 0.0, 5.0});
  EXPECT_EQ(m.logits(TokenSeq{0, 1})[2], 5.0);
  EXPECT_EQ(m.logits(TokenSeq{1, 0})[2], 0.0);
  EXPECT_THROW(m.set({0}, {1.0}), ConfigError);
}

TEST(Sampling, DegenerateDistributionAlwaysReturnsItsSupport) {
  std::vector<double> p(6, 0.0);
  p[3] = 1.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    SplitMix64 rng(s);
    EXPECT_EQ(sample(p, rng), 3u);
  }
}

TEST(Sampling, GreedyPicksArgmaxWithLowestIndexTieBreak) {
  EXPECT_EQ(greedy(std::vector<double>{0.2, 0.5, 0.3}), 1u);
  EXPECT_EQ(greedy(std::vector<double>{0.4, 0.2, 0.4}), 0u);
}

TEST(Sampling, RejectsUnnormalizedVectors) {
  SplitMix64 rng(1);
  EXPECT_THROW(sample(std::vector<double>{0.5, 0.6}, rng), InputError);
  EXPECT_THROW(sample(std::vector<double>{-0.5, 1.5}, rng), InputError);
}

TEST(Sampling, EmpiricalFrequencyWithinThreeSigma) {
  // 3 sigma of a Binomial(1e5, 0.25) proportion is ~0.0041; [0.242, 0.258]
  // is slightly wider.
  SplitMix64 rng(2024);
  const std::vector<double> p{0.25, 0.75};
  int zeros = 0;
  for (int i = 0; i < 100000; ++i) zeros += sample(p, rng) == 0;
  const double f = zeros / 1e5;
  EXPECT_GE(f, 0.242);
  EXPECT_LE(f, 0.258);
}

TEST(Sampling, FixedSeedIsReproducible) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  SplitMix64 a(77), b(77);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(sample(p, a), sample(p, b));
}

}  // namespace
}  // namespace watersearch
