#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "shareboost/dataset.hpp"
#include "shareboost/loss.hpp"
#include "shareboost/solver.hpp"
#include "shareboost/trainer.hpp"

namespace shareboost {

// ---------------------------------------------------------------------------
// One-vs-rest greedy binary logistic regression

namespace detail {

using Array = Eigen::ArrayXd;

/// log(1 + e^{-a}) elementwise.
inline Array softplus_neg(const Array& a) { return (-a).max(0.0) + array_log1p((-a.abs()).exp()); }

/// 1 / (1 + e^{a}) elementwise.
inline Array sigmoid_neg(const Array& a) {
  const Array e = (-a.abs()).exp();
  return (a > 0.0).select(e, 1.0) / (1.0 + e);
}

}  // namespace detail

/// (1/m) sum log(1 + exp(-z <w, x>)) over the columns of a design matrix, z in {-1, +1}.
class BinaryLogisticObjective {
 public:
  BinaryLogisticObjective(Matrix design, Vector z) : x_(std::move(design)), z_(std::move(z)) {}

  std::size_t dimension() const { return static_cast<std::size_t>(x_.cols()); }

  double value(const Vector& w) const { return detail::softplus_neg(margins(w)).mean(); }

  double value_and_gradient(const Vector& w, Vector& g) const {
    const detail::Array a = margins(w);
    const detail::Array e = (-a.abs()).exp();
    const Vector coef = (-z_.array() * (a > 0.0).select(e, 1.0) / (1.0 + e)).matrix();
    g = x_.transpose() * coef / static_cast<double>(a.size());
    return ((-a).max(0.0) + detail::array_log1p(e)).mean();
  }

  /// f(b) - f(a) as the mean of log1p(sigma(-a_i) expm1(a_i - b_i)), free of cancellation.
  double value_difference(const Vector& wa, const Vector& wb) const {
    const detail::Array a = margins(wa);
    const detail::Array delta = a - margins(wb);
    return detail::array_log1p(detail::sigmoid_neg(a) * detail::array_expm1(delta)).mean();
  }

 private:
  detail::Array margins(const Vector& w) const { return z_.array() * (x_ * w).array(); }

  Matrix x_;
  Vector z_;
};

struct BinaryGreedyModel {
  Vector weights;                    // length d, zero outside support
  std::vector<std::size_t> support;  // selection order
};

/// Greedy forward selection on |gradient coordinate| with a full refit of the selected
/// coordinates after every round.
class BinaryGreedy {
 public:
  BinaryGreedy(const Matrix& x, Vector z, SolverConfig solver, double early_stop_score = 1e-10)
      : x_(x), full_(x, z), z_(std::move(z)), solver_(solver), early_stop_(early_stop_score) {
    model_.weights = Vector::Zero(x.cols());
  }

  /// One round; returns false (and changes nothing) once every |gradient| is <= early_stop_score.
  bool step() {
    if (x_.cols() == 0 || stopped_) return false;
    Vector g;
    full_.value_and_gradient(model_.weights, g);
    Index best = 0;
    const Vector ag = g.cwiseAbs();
    for (Index r = 1; r < ag.size(); ++r) {
      if (ag(r) > ag(best)) best = r;
    }
    if (ag(best) <= early_stop_) {
      stopped_ = true;
      return false;
    }
    auto& sup = model_.support;
    const auto b = static_cast<std::size_t>(best);
    if (std::find(sup.begin(), sup.end(), b) == sup.end()) sup.push_back(b);
    Matrix design(x_.rows(), static_cast<Index>(sup.size()));
    Vector init(static_cast<Index>(sup.size()));
    for (std::size_t c = 0; c < sup.size(); ++c) {
      design.col(static_cast<Index>(c)) = x_.col(static_cast<Index>(sup[c]));
      init(static_cast<Index>(c)) = model_.weights(static_cast<Index>(sup[c]));
    }
    const SolverResult sr = minimize_smooth(BinaryLogisticObjective(std::move(design), z_), init, solver_);
    for (std::size_t c = 0; c < sup.size(); ++c) model_.weights(static_cast<Index>(sup[c])) = sr.point(static_cast<Index>(c));
    return true;
  }

  const BinaryGreedyModel& model() const { return model_; }

 private:
  const Matrix& x_;
  BinaryLogisticObjective full_;
  Vector z_;
  SolverConfig solver_;
  double early_stop_;
  bool stopped_ = false;
  BinaryGreedyModel model_;
};

inline BinaryGreedyModel binary_greedy_train(const Matrix& x, const Vector& z, std::size_t rounds,
                                             const SolverConfig& solver = {}, double early_stop_score = 1e-10) {
  BinaryGreedy g(x, z, solver, early_stop_score);
  for (std::size_t t = 0; t < rounds && g.step(); ++t) {
  }
  return g.model();
}

struct OneVsRestRound {
  std::size_t round = 0;          // rounds per class completed
  std::size_t union_support = 0;
  double train_error = 0.0;
};

struct OneVsRestModel {
  std::vector<BinaryGreedyModel> classes;
  std::vector<OneVsRestRound> trace;

  /// k x d matrix whose rows are the binary weight vectors; prediction is its argmax.
  Matrix weight_matrix() const {
    if (classes.empty()) return {};
    Matrix w(static_cast<Index>(classes.size()), classes.front().weights.size());
    for (std::size_t c = 0; c < classes.size(); ++c) w.row(static_cast<Index>(c)) = classes[c].weights.transpose();
    return w;
  }

  std::vector<std::size_t> union_support() const {
    std::vector<std::size_t> u;
    for (const auto& m : classes) u.insert(u.end(), m.support.begin(), m.support.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  }

  std::size_t predict(const Eigen::Ref<const Vector>& x) const { return shareboost::predict(weight_matrix(), x); }
};

/// k binary problems (label +1 iff y = c), each given up to rounds_per_class greedy rounds.
/// All classes advance one round at a time; the trace reports the union support and the
/// argmax train error after each round. on_round may return false to stop early.
inline OneVsRestModel one_vs_rest_train(const Dataset& s, std::size_t rounds_per_class, const SolverConfig& solver = {},
                                        double early_stop_score = 1e-10,
                                        const std::function<bool(const OneVsRestRound&)>& on_round = {}) {
  detail::require(!s.empty(), "one-vs-rest: dataset is empty");
  detail::require(rounds_per_class >= 1, "one-vs-rest: need at least one round per class");
  std::vector<BinaryGreedy> learners;
  learners.reserve(s.k());
  for (std::size_t c = 0; c < s.k(); ++c) {
    Vector z(static_cast<Index>(s.m()));
    for (std::size_t i = 0; i < s.m(); ++i) z(static_cast<Index>(i)) = s.label(i) == c ? 1.0 : -1.0;
    learners.emplace_back(s.features(), std::move(z), solver, early_stop_score);
  }
  OneVsRestModel out;
  auto snapshot = [&] {
    out.classes.clear();
    for (const auto& l : learners) out.classes.push_back(l.model());
  };
  for (std::size_t t = 0; t < rounds_per_class; ++t) {
    bool any = false;
    for (auto& l : learners) any = l.step() || any;
    if (!any) break;
    snapshot();
    OneVsRestRound r;
    r.round = t + 1;
    r.union_support = out.union_support().size();
    r.train_error = zero_one_error(out.weight_matrix(), s);
    out.trace.push_back(r);
    if (on_round && !on_round(r)) break;
  }
  if (out.classes.empty()) snapshot();
  return out;
}

// ---------------------------------------------------------------------------
// Entrywise l1 / l2 regularized training over all columns

struct EntrywiseRegConfig {
  int p = 1;                     // 1: lambda sum |W_ij|, 2: lambda sum W_ij^2
  std::vector<double> lambdas;   // descending
  double support_threshold = 1e-8;

  void validate() const {
    detail::require(p == 1 || p == 2, "entrywise: p must be 1 or 2");
    detail::require(!lambdas.empty(), "entrywise: lambda grid is empty");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      detail::require(lambdas[i] >= 0.0 && std::isfinite(lambdas[i]), "entrywise: lambdas must be finite and >= 0");
      if (i > 0) detail::require(lambdas[i] <= lambdas[i - 1], "entrywise: lambda grid must be sorted descending");
    }
  }
};

struct PathPoint {
  double lambda = 0.0;
  Matrix weights;               // k x d
  double loss = 0.0;            // L(W), unregularized
  double objective = 0.0;       // L(W) + penalty
  std::size_t support_count = 0;  // columns with max |W_ij| > threshold
  double train_error = 0.0;
  SolverResult solver;
};

/// One proximal gradient step for lambda ||w||_1: soft-threshold(w - step g, step lambda).
inline Vector prox_gradient_step(const Vector& w, const Vector& g, double step, double lambda) {
  return L1Prox{lambda}(w - step * g, step);
}

/// Grid of n values from lambda_max down to lambda_max * ratio, geometrically spaced, where
/// lambda_max is the largest |dL/dW_ij| at W = 0 (the smallest lambda giving W = 0 under l1).
inline std::vector<double> lambda_grid(const Dataset& s, std::size_t n, double ratio = 1e-3) {
  detail::require(n >= 1 && ratio > 0.0 && ratio < 1.0, "lambda grid: need n >= 1 and ratio in (0,1)");
  const Matrix g = gradient(Matrix::Zero(static_cast<Index>(s.k()), static_cast<Index>(s.d())), s);
  const double top = g.cwiseAbs().maxCoeff();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? top : top * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return out;
}

/// min_W L(W) + lambda ||W||_{p,p}^p for every lambda of the grid, warm-starting each point
/// from the previous solution.
inline std::vector<PathPoint> entrywise_reg_train(const Dataset& s, const EntrywiseRegConfig& cfg,
                                                  const SolverConfig& solver = {}) {
  detail::require(!s.empty(), "entrywise: dataset is empty");
  cfg.validate();
  const Index k = static_cast<Index>(s.k());
  const Index d = static_cast<Index>(s.d());
  std::vector<std::size_t> all(s.d());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Vector w = Vector::Zero(k * d);
  std::vector<PathPoint> out;
  for (double lambda : cfg.lambdas) {
    PathPoint pt;
    pt.lambda = lambda;
    if (cfg.p == 2) {
      const RestrictedObjective obj(s.features(), s.labels(), s.k(), Regularizer::frobenius(lambda));
      pt.solver = minimize_smooth(obj, w, solver);
    } else {
      const RestrictedObjective obj(s.features(), s.labels(), s.k(), Regularizer::none());
      pt.solver = minimize_composite(obj, L1Prox{lambda}, w, solver);
    }
    w = pt.solver.point;
    pt.weights = Eigen::Map<const Matrix>(w.data(), k, d);
    pt.loss = loss_avg(pt.weights, s);
    pt.objective = pt.loss + lambda * (cfg.p == 1 ? pt.weights.cwiseAbs().sum() : pt.weights.squaredNorm());
    for (Index j = 0; j < d; ++j) {
      if (pt.weights.col(j).cwiseAbs().maxCoeff() > cfg.support_threshold) ++pt.support_count;
    }
    pt.train_error = zero_one_error(pt.weights, s);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace shareboost
