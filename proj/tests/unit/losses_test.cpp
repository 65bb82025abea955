#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "stylectl/losses.hpp"
#include "test_support.hpp"

using namespace stylectl;

namespace {

std::vector<double> flat(const BasicTensor<double>& t) { return {t.data().begin(), t.data().end()}; }

GuidanceChannel normalised(GuidanceChannel t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  for (auto& v : t.data()) v /= std::sqrt(s);
  return t;
}

GuidanceChannel uniform_guide(std::size_t h, std::size_t w) {
  return GuidanceChannel(1, h, w, 1.0 / std::sqrt(static_cast<double>(h * w)));
}

GuidanceChannel soft_guide(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  return normalised(oracle::random_tensor(1, h, w, rng, 0.05, 1.0));
}

// Binary half masks: left columns vs the rest, already normalised.
std::pair<GuidanceChannel, GuidanceChannel> split_guides(std::size_t h, std::size_t w, std::size_t cut) {
  GuidanceChannel a(1, h, w), b(1, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) (x < cut ? a : b)(0, y, x) = 1.0;
  return {normalised(a), normalised(b)};
}

template <typename F>
double fd_error(const BasicTensor<double>& x, const BasicTensor<double>& analytic, F loss, double h = 1e-5) {
  auto f = [&](const std::vector<double>& v) { return loss(BasicTensor<double>(x.shape(), v)); };
  return oracle::relative_error(flat(analytic), oracle::numeric_gradient(f, flat(x), h));
}

}  // namespace

TEST(Gram, AllOnesSingleChannel) {
  const auto g = gram(Tensor(1, 3, 7, 1.0f));
  ASSERT_EQ(g.size(), 1u);
  EXPECT_DOUBLE_EQ(g.values(0, 0), 1.0);
}

TEST(Gram, IdenticalChannelsGiveRankOne) {
  std::mt19937_64 rng(1);
  auto one = oracle::random_tensor(1, 4, 4, rng);
  BasicTensor<double> two(2, 4, 4);
  for (std::size_t i = 0; i < 16; ++i) two[i] = two[16 + i] = one[i];
  const auto g = gram(two).values;
  EXPECT_NEAR(g(0, 0), g(0, 1), 1e-12);
  EXPECT_NEAR(g(1, 1), g(1, 0), 1e-12);
  EXPECT_NEAR(g.determinant(), 0.0, 1e-12);
}

TEST(Gram, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto f = oracle::random_tensor<float>(4, 5, 5, rng);
    EXPECT_LT(oracle::max_abs_diff(gram(f).values, oracle::gram(f)), 1e-6);
  }
}

TEST(Gram, SymmetricPositiveSemiDefinite) {
  std::mt19937_64 rng(3);
  const auto f = oracle::random_tensor(6, 3, 3, rng);  // N > M: rank deficient
  const auto g = gram(f).values;
  EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-5 * g.trace());
}

TEST(Gram, InvariantToSpatialPermutation) {
  std::mt19937_64 rng(4);
  const auto f = oracle::random_tensor(3, 4, 5, rng);
  std::vector<std::size_t> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  BasicTensor<double> p(3, 4, 5);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 20; ++i) p[c * 20 + i] = f[c * 20 + perm[i]];
  EXPECT_LT(oracle::max_abs_diff(gram(p).values, gram(f).values), 1e-12);
}

TEST(ContentLoss, ZeroAtTarget) {
  std::mt19937_64 rng(5);
  const auto f = oracle::random_tensor(3, 4, 4, rng);
  const auto l = content_loss(f, f);
  EXPECT_EQ(l.value, 0.0);
  for (double v : l.grad.data()) EXPECT_EQ(v, 0.0);
}

TEST(ContentLoss, ScalarExample) {
  const auto l = content_loss(BasicTensor<double>(1, 1, 1, 3.0), BasicTensor<double>(1, 1, 1, 1.0));
  EXPECT_DOUBLE_EQ(l.value, 4.0);
  EXPECT_DOUBLE_EQ(l.grad[0], 4.0);
}

TEST(ContentLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(6);
  const auto x = oracle::random_tensor(3, 4, 5, rng);
  const auto t = oracle::random_tensor(3, 4, 5, rng);
  const auto l = content_loss(x, t);
  EXPECT_NEAR(l.value, oracle::content_loss(x, t), 1e-12);
  EXPECT_LT(fd_error(x, l.grad, [&](const auto& v) { return oracle::content_loss(v, t); }), 1e-4);
  EXPECT_THROW(content_loss(x, BasicTensor<double>(3, 4, 4)), ConfigError);
}

TEST(StyleLoss, ZeroWhenGramsAgree) {
  std::mt19937_64 rng(7);
  const auto f = oracle::random_tensor(4, 5, 5, rng);
  const auto l = style_loss(f, gram(f));
  EXPECT_NEAR(l.value, 0.0, 1e-20);
}

TEST(StyleLoss, ScalarExample) {
  const GramMatrix target{Eigen::MatrixXd::Zero(1, 1)};
  const auto l = style_loss(BasicTensor<double>(1, 1, 1, 2.0), target);
  EXPECT_DOUBLE_EQ(l.value, 4.0);
  EXPECT_DOUBLE_EQ(l.grad[0], 8.0);
}

TEST(StyleLoss, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 rng(8);
  const auto x = oracle::random_tensor(4, 5, 6, rng);
  const auto target = gram(oracle::random_tensor(4, 5, 6, rng));
  const double w = 0.7;
  const auto l = style_loss(x, target, w);
  auto ref = [&](const BasicTensor<double>& v) { return oracle::gram_match(oracle::gram(v), target.values, 4, w); };
  EXPECT_NEAR(l.value, ref(x), 1e-12 * (1.0 + l.value));
  EXPECT_LT(fd_error(x, l.grad, ref), 1e-4);
  EXPECT_THROW(style_loss(x, gram(oracle::random_tensor(3, 2, 2, rng))), ConfigError);
}

TEST(GuidedGram, UniformGuideEqualsGram) {
  std::mt19937_64 rng(9);
  const auto f = oracle::random_tensor<float>(5, 6, 7, rng);
  const auto g = guided_gram(f, uniform_guide(6, 7));
  EXPECT_EQ(g.values, gram(f).values);
  EXPECT_EQ(g.normalisation, GramNormalisation::guided);
}

TEST(GuidedGram, IgnoresFeaturesOutsideTheGuide) {
  std::mt19937_64 rng(10);
  auto f = oracle::random_tensor(3, 4, 6, rng);
  const auto [left, right] = split_guides(4, 6, 3);
  const auto before = guided_gram(f, left).values;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 3; x < 6; ++x) f(c, y, x) = 100.0;
  EXPECT_EQ(guided_gram(f, left).values, before);
}

TEST(GuidedGram, MatchesLoopOracle) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto f = oracle::random_tensor<float>(4, 5, 5, rng);
    const auto t = soft_guide(5, 5, rng);
    EXPECT_LT(oracle::max_abs_diff(guided_gram(f, t).values, oracle::guided_gram(f, t)), 1e-6);
  }
}

TEST(GuidedGram, Errors) {
  std::mt19937_64 rng(12);
  const auto f = oracle::random_tensor(2, 4, 4, rng);
  EXPECT_THROW(guided_gram(f, GuidanceChannel(1, 4, 4, 1.0)), ConfigError);
  EXPECT_THROW(guided_gram(f, uniform_guide(4, 5)), ConfigError);
}

TEST(GuidedStyleLoss, UniformSingleRegionReducesToStyleLoss) {
  std::mt19937_64 rng(13);
  const auto x = oracle::random_tensor<float>(6, 5, 7, rng);
  const auto s = oracle::random_tensor<float>(6, 5, 7, rng);
  const auto t = uniform_guide(5, 7);
  const auto plain = style_loss(x, gram(s), 0.3);
  const auto guided = guided_style_loss(x, {GuidedRegion{guided_gram(s, t), t, 1.0}}, 0.3);
  EXPECT_EQ(guided.value, plain.value);
  EXPECT_EQ(guided.grad, plain.grad);
}

TEST(GuidedStyleLoss, DisjointRegionsWithTargetsMet) {
  std::mt19937_64 rng(14);
  const auto x = oracle::random_tensor(3, 4, 6, rng);
  const auto [a, b] = split_guides(4, 6, 2);
  const auto l = guided_style_loss(x, {GuidedRegion{guided_gram(x, a), a, 1.0}, GuidedRegion{guided_gram(x, b), b, 2.0}});
  EXPECT_NEAR(l.value, 0.0, 1e-24);
}

TEST(GuidedStyleLoss, SoftOverlappingRegionsFiniteDifferences) {
  std::mt19937_64 rng(15);
  const auto x = oracle::random_tensor(4, 5, 5, rng);
  const auto s = oracle::random_tensor(4, 5, 5, rng);
  const auto t1 = soft_guide(5, 5, rng);
  const auto t2 = soft_guide(5, 5, rng);
  const std::vector<GuidedRegion> regions = {{guided_gram(s, t1), t1, 0.8}, {guided_gram(s, t2), t2, 1.7}};
  const double w = 0.4;
  const auto l = guided_style_loss(x, regions, w);
  auto ref = [&](const BasicTensor<double>& v) {
    double e = 0.0;
    for (const auto& r : regions) e += r.weight * oracle::gram_match(oracle::guided_gram(v, r.guide), r.target.values, 4, w);
    return e;
  };
  EXPECT_NEAR(l.value, ref(x), 1e-12 * (1.0 + l.value));
  EXPECT_LT(fd_error(x, l.grad, ref), 1e-4);
}

TEST(GuidedStyleLoss, KeyedFormRequiresMatchingRegions) {
  std::mt19937_64 rng(16);
  const auto x = oracle::random_tensor(2, 4, 4, rng);
  const auto t = uniform_guide(4, 4);
  std::map<std::string, GramMatrix> targets{{"a", gram(x)}};
  std::map<std::string, GuidanceChannel> guides{{"a", t}};
  std::map<std::string, double> weights{{"a", 1.0}};
  EXPECT_NEAR(guided_style_loss(x, targets, guides, weights).value, 0.0, 1e-20);
  guides.emplace("b", t);
  EXPECT_THROW(guided_style_loss(x, targets, guides, weights), ConfigError);
}

TEST(GuidedStyleLoss, RejectsUnnormalisedGuide) {
  std::mt19937_64 rng(17);
  const auto x = oracle::random_tensor(2, 4, 4, rng);
  const GuidanceChannel raw(1, 4, 4, 1.0);
  EXPECT_THROW(guided_style_loss(x, {GuidedRegion{gram(x), raw, 1.0}}), ConfigError);
}

TEST(GuidedStyleLoss, LocalityOfDisjointRegions) {
  std::mt19937_64 rng(18);
  auto x = oracle::random_tensor(3, 4, 6, rng);
  const auto [a, b] = split_guides(4, 6, 3);
  const auto gb = guided_gram(x, b).values;
  x(1, 2, 1) += 5.0;  // inside region a
  EXPECT_EQ(guided_gram(x, b).values, gb);
}

TEST(GuidedSum, NoGuidesEqualsGram) {
  std::mt19937_64 rng(19);
  const auto f = oracle::random_tensor(3, 4, 4, rng);
  EXPECT_EQ(guided_sum_gram(f, {}).values, gram(f).values);
}

TEST(GuidedSum, ZeroChannelGivesZeroRowAndColumn) {
  std::mt19937_64 rng(20);
  const auto f = oracle::random_tensor(3, 4, 4, rng);
  const auto g = guided_sum_gram(f, {GuidanceChannel(1, 4, 4, 0.0)}).values;
  EXPECT_EQ(g.rows(), 4);
  EXPECT_EQ(g.row(3).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.col(3).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GuidedSum, MatchesStackThenGramOracle) {
  std::mt19937_64 rng(21);
  const auto f = oracle::random_tensor<float>(4, 6, 6, rng);
  GuidanceChannel a(1, 6, 6), b(1, 6, 6);
  for (std::size_t i = 0; i < 36; ++i) (i % 6 < 2 ? a : b)[i] = 1.0;
  EXPECT_LT(oracle::max_abs_diff(guided_sum_gram(f, {a, b}).values, oracle::stacked_gram(f, {a, b})), 1e-6);
  EXPECT_THROW(guided_sum_gram(f, {GuidanceChannel(1, 5, 6)}), ConfigError);
}

TEST(GuidedSum, LossFiniteDifferences) {
  std::mt19937_64 rng(22);
  const auto x = oracle::random_tensor(3, 5, 5, rng);
  const auto s = oracle::random_tensor(3, 5, 5, rng);
  const std::vector<GuidanceChannel> guides = {oracle::random_tensor(1, 5, 5, rng, 0.0, 1.0),
                                               oracle::random_tensor(1, 5, 5, rng, 0.0, 1.0)};
  const auto target = guided_sum_gram(s, guides);
  const auto l = guided_sum_loss(x, guides, target, 0.6);
  auto ref = [&](const BasicTensor<double>& v) {
    return oracle::gram_match(oracle::stacked_gram(v, guides), target.values, 5, 0.6);
  };
  EXPECT_NEAR(l.value, ref(x), 1e-12 * (1.0 + l.value));
  EXPECT_LT(fd_error(x, l.grad, ref), 1e-4);
}

TEST(LossProgram, ValidateRejectsBadInput) {
  const auto& m = testing_support::model();
  LossProgram p;
  p.content.push_back({"relu9_9", BasicTensor<double>(1, 1, 1), 1.0});
  EXPECT_THROW(p.validate(m), ConfigError);
  LossProgram q;
  q.style_weight = -1.0;
  EXPECT_THROW(q.validate(m), ConfigError);
  LossProgram r;
  r.content_weight = std::numeric_limits<double>::infinity();
  EXPECT_THROW(r.validate(m), ConfigError);
}

TEST(LossProgram, EvaluateSumsWeightedTerms) {
  std::mt19937_64 rng(23);
  const auto f = oracle::random_tensor(4, 4, 4, rng);
  const auto t = oracle::random_tensor(4, 4, 4, rng);
  LossProgram p;
  p.content_weight = 2.0;
  p.style_weight = 5.0;
  p.content.push_back({"relu1_1", t, 1.0});
  p.style.push_back({"relu1_1", gram(t), 0.5});
  ActivationSet<double> acts;
  acts.emplace("relu1_1", f);
  const auto ev = evaluate(p, acts);
  ASSERT_EQ(ev.terms.size(), 2u);
  EXPECT_EQ(ev.terms[0].first, "content/relu1_1");
  EXPECT_EQ(ev.terms[1].first, "style/relu1_1");
  const auto c = content_loss(f, t);
  const auto s = style_loss(f, gram(t), 0.5);
  EXPECT_NEAR(ev.total, 2.0 * c.value + 5.0 * s.value, 1e-12);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(ev.grads.at("relu1_1")[i], 2.0 * c.grad[i] + 5.0 * s.grad[i], 1e-12);
  }
  ActivationSet<double> missing;
  EXPECT_THROW(evaluate(p, missing), ConfigError);
}
