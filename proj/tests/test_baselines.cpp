#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shareboost/baselines.hpp"
#include "shareboost/synthetic.hpp"

namespace sb = shareboost;
using sb::Dataset;
using sb::Index;
using sb::Matrix;
using sb::Vector;

namespace {

double entrywise_penalty(const Matrix& w, int p) { return p == 1 ? w.cwiseAbs().sum() : w.squaredNorm(); }

std::size_t count_nonzero_columns(const Matrix& w) {
  std::size_t n = 0;
  for (Index j = 0; j < w.cols(); ++j) n += w.col(j).cwiseAbs().maxCoeff() > 1e-8 ? 1 : 0;
  return n;
}

}  // namespace

TEST(BinaryLogistic, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(3);
  const Matrix x = oracle::random_matrix(rng, 15, 4);
  Vector z(15);
  for (Index i = 0; i < 15; ++i) z(i) = (i % 3 == 0) ? 1.0 : -1.0;
  const sb::BinaryLogisticObjective obj(x, z);
  const Vector w = oracle::random_matrix(rng, 4, 1);
  Vector g;
  const double f = obj.value_and_gradient(w, g);
  double naive = 0.0;
  for (Index i = 0; i < 15; ++i) naive += std::log1p(std::exp(-z(i) * x.row(i).dot(w)));
  EXPECT_NEAR(f, naive / 15.0, 1e-14);
  const Matrix fd = oracle::finite_difference([&](const Matrix& v) { return obj.value(Vector(v)); }, Matrix(w));
  EXPECT_LT(oracle::relative_error(Matrix(g), fd), 1e-7);
  const Vector w2 = w + 1e-9 * Vector::Ones(4);
  EXPECT_NEAR(obj.value_difference(w, w2), obj.value(w2) - obj.value(w), 1e-15);
}

TEST(OneVsRest, SingleExampleEachPicksTopFeature) {
  Matrix x(1, 2);
  x << 1.0, -0.5;
  const Dataset s(x, {0}, 2);
  const auto model = sb::one_vs_rest_train(s, 1);
  ASSERT_EQ(model.classes.size(), 2u);
  // binary gradient at 0 is -z x / 2, so |g| = (0.5, 0.25) for both problems
  for (const auto& c : model.classes) EXPECT_EQ(c.support, (std::vector<std::size_t>{0}));
  EXPECT_EQ(model.union_support().size(), 1u);
}

TEST(OneVsRest, TwoClassUnionBound) {
  std::mt19937_64 rng(9);
  const Dataset s = oracle::random_dataset(rng, 60, 12, 2);
  for (std::size_t tb : {1, 2, 3, 5}) {
    const auto model = sb::one_vs_rest_train(s, tb);
    EXPECT_LE(model.union_support().size(), 2 * tb);
    std::vector<std::size_t> merged;
    for (const auto& c : model.classes) merged.insert(merged.end(), c.support.begin(), c.support.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    EXPECT_EQ(merged, model.union_support());
    EXPECT_EQ(model.trace.back().union_support, merged.size());
  }
}

TEST(OneVsRest, NeedsMoreFeaturesThanShareBoostOnCodeData) {
  sb::CodeDatasetSpec spec;
  spec.k = 8;
  spec.m = 400;
  const Dataset s = sb::gen_code_dataset(spec, 0.0, 2);
  sb::TrainConfig cfg;
  cfg.rounds = 11;
  std::size_t shareboost_features = 0;
  cfg.on_round = [&](const sb::RoundRecord& r) {
    shareboost_features = r.support_size;
    return r.train_error > 0.0;
  };
  const auto sbr = sb::shareboost_train(s, cfg);
  ASSERT_EQ(sbr.trace.rounds.back().train_error, 0.0);

  std::size_t ovr_features = 0;
  bool reached = false;
  sb::one_vs_rest_train(s, 11, {}, 1e-10, [&](const sb::OneVsRestRound& r) {
    ovr_features = r.union_support;
    reached = r.train_error == 0.0;
    return !reached;
  });
  // if one-vs-rest never gets there its union is a lower bound
  EXPECT_GT(ovr_features, shareboost_features) << "one-vs-rest reached zero error: " << reached;
}

TEST(Prox, OneDimensionalSoftThreshold) {
  Vector w(1), g(1);
  w << 1.0;
  g << 0.5;
  EXPECT_NEAR(sb::prox_gradient_step(w, g, 0.4, 1.0)(0), 0.4, 1e-12);
  g << -2.0;
  EXPECT_NEAR(sb::prox_gradient_step(w, g, 0.5, 0.1)(0), 1.95, 1e-12);
  w << -0.1;
  g << 0.0;
  EXPECT_EQ(sb::prox_gradient_step(w, g, 1.0, 0.5)(0), 0.0);
}

TEST(EntrywiseReg, ConfigValidation) {
  sb::EntrywiseRegConfig cfg;
  EXPECT_THROW(cfg.validate(), sb::InputError);
  cfg.lambdas = {0.1, 0.2};
  EXPECT_THROW(cfg.validate(), sb::InputError);
  cfg.lambdas = {0.2, 0.1};
  cfg.p = 3;
  EXPECT_THROW(cfg.validate(), sb::InputError);
}

TEST(EntrywiseReg, HugeLambdaGivesZero) {
  std::mt19937_64 rng(4);
  const Dataset s = oracle::random_dataset(rng, 40, 5, 3);
  for (int p : {1, 2}) {
    sb::EntrywiseRegConfig cfg;
    cfg.p = p;
    cfg.lambdas = {1e9};  // l2 only shrinks, so W ~ grad / (2 lambda)
    const auto path = sb::entrywise_reg_train(s, cfg);
    EXPECT_EQ(path[0].support_count, 0u) << "p=" << p;
  }
}

TEST(EntrywiseReg, ZeroLambdaMatchesFullSupportCorrective) {
  std::mt19937_64 rng(5);
  const Dataset s = oracle::random_dataset(rng, 60, 4, 3);
  std::vector<std::size_t> all(4);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double ref = sb::loss_avg(sb::corrective_solve(s, all, sb::WeightMatrix(3, 4), {}, {}).weights, s);
  for (int p : {1, 2}) {
    sb::EntrywiseRegConfig cfg;
    cfg.p = p;
    cfg.lambdas = {0.0};
    EXPECT_NEAR(sb::entrywise_reg_train(s, cfg)[0].loss, ref, 1e-6) << "p=" << p;
  }
}

TEST(EntrywiseReg, L1PathOnCodeData) {
  sb::CodeDatasetSpec spec;
  spec.k = 8;
  spec.m = 400;
  const Dataset s = sb::gen_code_dataset(spec, 0.0, 3);
  sb::EntrywiseRegConfig cfg;
  cfg.p = 1;
  cfg.lambdas = sb::lambda_grid(s, 15);
  const auto path = sb::entrywise_reg_train(s, cfg);
  for (std::size_t i = 1; i < path.size(); ++i) EXPECT_GE(path[i].support_count, path[i - 1].support_count);
  bool any_zero = false;
  for (const auto& pt : path) {
    if (pt.train_error == 0.0) {
      any_zero = true;
      EXPECT_GE(pt.support_count, spec.k);
    }
  }
  EXPECT_TRUE(any_zero);
}

TEST(EntrywiseReg, GridStartsAtZeroSolution) {
  std::mt19937_64 rng(6);
  const Dataset s = oracle::random_dataset(rng, 40, 6, 3);
  sb::EntrywiseRegConfig cfg;
  cfg.lambdas = sb::lambda_grid(s, 5);
  const auto path = sb::entrywise_reg_train(s, cfg);
  EXPECT_EQ(path.front().support_count, 0u);
  EXPECT_NEAR(path.back().lambda, path.front().lambda * 1e-3, 1e-15);
}

TEST(ObjectiveComparison, FlatBeatsSharedForAnyLambda) {
  sb::CodeDatasetSpec spec;
  spec.k = 16;
  spec.m = 160;
  const Dataset s = sb::gen_code_dataset(spec, 0.0, 1);
  const sb::ReferencePair ref = sb::reference_matrices(spec);
  for (double c : {1.0, 2.0, 5.0}) {
    for (int p : {1, 2}) {
      const Matrix f = c * ref.flat;
      const Matrix sh = c * ref.shared;
      EXPECT_LT(entrywise_penalty(f, p), entrywise_penalty(sh, p));
      for (double lambda : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
        EXPECT_LT(sb::loss_avg(f, s) + lambda * entrywise_penalty(f, p), sb::loss_avg(sh, s) + lambda * entrywise_penalty(sh, p))
            << "c=" << c << " p=" << p << " lambda=" << lambda;
      }
    }
  }
  EXPECT_EQ(count_nonzero_columns(ref.flat), spec.k);
}
