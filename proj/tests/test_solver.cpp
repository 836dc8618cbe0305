#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shareboost/solver.hpp"
#include "shareboost/trainer.hpp"

namespace sb = shareboost;
using sb::Matrix;
using sb::Vector;

namespace {

struct Quadratic {
  Matrix a;  // SPD
  Vector b;
  std::size_t dimension() const { return static_cast<std::size_t>(b.size()); }
  double value(const Vector& x) const { return 0.5 * x.dot(a * x) - b.dot(x); }
  double value_and_gradient(const Vector& x, Vector& g) const {
    g = a * x - b;
    return value(x);
  }
};

Quadratic random_quadratic(std::mt19937_64& rng, sb::Index n, double cond) {
  Matrix q = oracle::random_matrix(rng, n, n).householderQr().householderQ();
  Vector eig(n);
  for (sb::Index i = 0; i < n; ++i) eig(i) = std::pow(cond, static_cast<double>(i) / std::max<sb::Index>(1, n - 1));
  return {q * eig.asDiagonal() * q.transpose(), oracle::random_matrix(rng, n, 1).col(0)};
}

}  // namespace

TEST(Solver, OneDimensionalQuadratic) {
  sb::FunctionObjective f(
      1, [](const Vector& x) { return (x(0) - 3.0) * (x(0) - 3.0); },
      [](const Vector& x) { return Vector::Constant(1, 2.0 * (x(0) - 3.0)); });
  auto res = sb::minimize_smooth(f, Vector::Zero(1));
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.point(0), 3.0, 1e-6);
  EXPECT_LE(res.final_gradient_norm, 1e-8);
}

TEST(Solver, AlreadyOptimal) {
  sb::FunctionObjective f(
      2, [](const Vector& x) { return x.squaredNorm(); }, [](const Vector& x) { return Vector(2.0 * x); });
  auto res = sb::minimize_smooth(f, Vector::Zero(2));
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.iterations, 1u);
  EXPECT_EQ(res.point, Vector::Zero(2));
}

TEST(Solver, StronglyConvexQuadraticsReachOptimum) {
  std::mt19937_64 rng(101);
  for (sb::Index n : {2, 10, 50}) {
    Quadratic f = random_quadratic(rng, n, 100.0);
    const Vector opt = f.a.ldlt().solve(f.b);
    sb::SolverConfig cfg;
    cfg.max_iterations = 5000;
    cfg.tolerance = 1e-10;
    auto res = sb::minimize_smooth(f, Vector::Zero(n), cfg);
    EXPECT_LE(res.iterations, 5000u);
    EXPECT_LE(f.value(res.point) - f.value(opt), 1e-8) << "n=" << n;
  }
}

TEST(Solver, BestValueIsMonotoneAndStepsSatisfyDescentCondition) {
  std::mt19937_64 rng(103);
  auto s = oracle::random_dataset(rng, 30, 6, 4);
  sb::RestrictedObjective obj(s.features(), s.labels(), s.k(), {});
  std::vector<double> accepted;
  std::size_t violations = 0;
  auto res = sb::minimize_smooth(obj, Vector::Zero(static_cast<sb::Index>(obj.dimension())), {},
                                 [&](const sb::SolverStep& st) {
                                   const Vector diff = st.to - st.from;
                                   const double bound = st.from_gradient.dot(diff) + diff.squaredNorm() / (2.0 * st.step);
                                   if (st.value_change > bound) ++violations;
                                   accepted.push_back(st.value_change);
                                 });
  EXPECT_EQ(violations, 0u);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(res.value, obj.value(Vector::Zero(static_cast<sb::Index>(obj.dimension()))));
}

TEST(Solver, SeparableLogisticRunsOutOfIterations) {
  // k=2, one feature equal to +1 for class 0 and -1 for class 1: infimum 0, never attained.
  Matrix x(4, 1);
  x << 1, -1, 1, -1;
  sb::Dataset s(x, {0, 1, 0, 1}, 2);
  sb::RestrictedObjective obj(s.features(), s.labels(), 2, {});
  sb::SolverConfig cfg;
  cfg.max_iterations = 200;
  cfg.tolerance = 1e-300;
  std::vector<double> values;
  auto res = sb::minimize_smooth(obj, Vector::Zero(2), cfg, [&](const sb::SolverStep& st) { values.push_back(st.value_change); });
  EXPECT_FALSE(res.converged);
  EXPECT_LT(res.value, obj.value(Vector::Zero(2)));
  EXPECT_LT(res.value, 1e-6);
}

TEST(Solver, NonFiniteInitialPointThrows) {
  sb::FunctionObjective f(
      1, [](const Vector&) { return std::nan(""); }, [](const Vector&) { return Vector::Zero(1); });
  EXPECT_THROW(sb::minimize_smooth(f, Vector::Zero(1)), sb::NumericalError);
}

TEST(Solver, InvalidConfigRejected) {
  sb::FunctionObjective f(
      1, [](const Vector& x) { return x.squaredNorm(); }, [](const Vector& x) { return Vector(2.0 * x); });
  sb::SolverConfig bad;
  bad.shrink = 1.0;
  EXPECT_THROW(sb::minimize_smooth(f, Vector::Zero(1), bad), sb::InputError);
  EXPECT_THROW(sb::minimize_smooth(f, Vector::Zero(3)), sb::InputError);
}

TEST(Solver, ProximalL1MatchesSoftThreshold) {
  // min 0.5 (x - 2)^2 + 0.5 |x|  ->  x = 1.5
  sb::FunctionObjective f(
      1, [](const Vector& x) { return 0.5 * (x(0) - 2.0) * (x(0) - 2.0); },
      [](const Vector& x) { return Vector::Constant(1, x(0) - 2.0); });
  auto res = sb::minimize_composite(f, sb::L1Prox{0.5}, Vector::Zero(1), {});
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.point(0), 1.5, 1e-9);
}
