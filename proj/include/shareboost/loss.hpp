#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include "shareboost/dataset.hpp"
#include "shareboost/regularizer.hpp"
#include "shareboost/weights.hpp"

namespace shareboost {

// Multiclass logistic loss of one example as a function of its score vector u = Wx:
//   l(u) = ln sum_{y'} exp(1[y' != y] - u_y + u_{y'})
// rho is the soft-max over the same shifted exponents.

/// l(u) for label y.
inline double score_loss(const Eigen::Ref<const Vector>& u, std::size_t y) {
  const Index k = u.size();
  const Index yi = static_cast<Index>(y);
  double top = -std::numeric_limits<double>::infinity();
  for (Index c = 0; c < k; ++c) top = std::max(top, u(c) + (c == yi ? 0.0 : 1.0));
  double acc = 0.0;
  for (Index c = 0; c < k; ++c) acc += std::exp(u(c) + (c == yi ? 0.0 : 1.0) - top);
  return top + std::log(acc) - u(yi);
}

/// Class posteriors rho_c for score vector u and label y.
inline Vector score_rho(const Eigen::Ref<const Vector>& u, std::size_t y) {
  const Index k = u.size();
  const Index yi = static_cast<Index>(y);
  Vector z(k);
  for (Index c = 0; c < k; ++c) z(c) = u(c) + (c == yi ? 0.0 : 1.0);
  z.array() -= z.maxCoeff();
  z = z.array().exp().matrix();
  return z / z.sum();
}

/// dl/du = rho - e_y.
inline Vector score_loss_gradient(const Eigen::Ref<const Vector>& u, std::size_t y) {
  Vector g = score_rho(u, y);
  g(static_cast<Index>(y)) -= 1.0;
  return g;
}

/// argmax_c u_c, lowest index on ties.
inline std::size_t argmax_lowest(const Eigen::Ref<const Vector>& u) {
  Index best = 0;
  for (Index c = 1; c < u.size(); ++c) {
    if (u(c) > u(best)) best = c;
  }
  return static_cast<std::size_t>(best);
}

namespace detail {

inline void check_example(const Matrix& w, const Eigen::Ref<const Vector>& x) {
  if (x.size() != w.cols()) {
    throw InputError("feature vector has length " + std::to_string(x.size()) + ", model expects d=" +
                     std::to_string(w.cols()));
  }
}

inline void check_dataset(const Matrix& w, const Dataset& s) {
  require(!s.empty(), "dataset is empty");
  require(s.d() == static_cast<std::size_t>(w.cols()),
          "dataset has d=" + std::to_string(s.d()) + ", model expects d=" + std::to_string(w.cols()));
  require(s.k() == static_cast<std::size_t>(w.rows()),
          "dataset has k=" + std::to_string(s.k()) + ", model has k=" + std::to_string(w.rows()));
}

/// 1 - onehot(y): the additive margin of every non-label class.
inline Matrix margins(const std::vector<std::size_t>& labels, Index k) {
  Matrix out = Matrix::Ones(static_cast<Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) out(static_cast<Index>(i), static_cast<Index>(labels[i])) = 0.0;
  return out;
}

/// Row soft-max of scores + margin into prob (m x k); returns the mean loss.
/// prob must already have the right shape to avoid reallocation.
inline double softmax_rows(const Matrix& scores, const Matrix& margin, Matrix& prob) {
  const auto m = static_cast<double>(scores.rows());
  prob = scores + margin;
  const Vector top = prob.rowwise().maxCoeff();
  prob.colwise() -= top;
  prob.array() = prob.array().exp();
  const Vector norm = prob.rowwise().sum();
  prob.array().colwise() /= norm.array();
  // score of the label: sum_c s_c (1 - margin_c)
  const double label_scores = (scores.array() * (1.0 - margin.array())).sum();
  return ((top.array() + norm.array().log()).sum() - label_scores) / m;
}

/// Mean loss over rows of an m x k score matrix given the margin matrix 1 - onehot;
/// optionally writes the residual rho - onehot.
inline double mean_softmax_loss(const Matrix& scores, const Matrix& margin, Matrix* residual = nullptr) {
  Matrix prob(scores.rows(), scores.cols());
  const double v = softmax_rows(scores, margin, prob);
  if (residual) {
    *residual = std::move(prob);
    residual->array() -= 1.0 - margin.array();
  }
  return v;
}

inline double mean_softmax_loss(const Matrix& scores, const std::vector<std::size_t>& labels,
                                Matrix* residual = nullptr) {
  return mean_softmax_loss(scores, margins(labels, scores.cols()), residual);
}

/// expm1 on arrays without a scalar call per entry: exp(d) - 1 is accurate to ~1e-13
/// relative for |d| >= 1e-3, and the degree-5 Taylor polynomial is accurate to ~1e-15 below that.
template <class Derived>
typename Derived::PlainObject array_expm1(const Eigen::ArrayBase<Derived>& d) {
  const auto poly = d * (1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d * (1.0 / 120.0)))));
  return (d.abs() < 1e-3).select(poly, d.exp() - 1.0);
}

/// log1p on arrays (x > -1): log(u) * x / (u - 1) with u = 1 + x corrects the rounding of u.
template <class Derived>
typename Derived::PlainObject array_log1p(const Eigen::ArrayBase<Derived>& x) {
  const typename Derived::PlainObject u = 1.0 + x;
  return (u == 1.0).select(x, u.log() * x / (u - 1.0));
}

/// Mean of l(s_b) - l(s_a) over rows from the soft-max probabilities at a:
///   log1p(sum_c rho_c(a) expm1(s_b - s_a)_c) - (s_b - s_a)_y
/// so that small changes are not lost to cancellation. delta is scratch space.
inline double mean_softmax_loss_change(const Matrix& prob_a, const Matrix& scores_a, const Matrix& scores_b,
                                       const Matrix& margin, Matrix& delta) {
  const auto m = static_cast<double>(scores_a.rows());
  delta = scores_b - scores_a;
  const double label_delta = (delta.array() * (1.0 - margin.array())).sum();
  const Eigen::ArrayXd acc = (prob_a.array() * array_expm1(delta.array())).rowwise().sum();
  return (array_log1p(acc).sum() - label_delta) / m;
}

}  // namespace detail

/// h_W(x) = argmax_y (Wx)_y with lowest-index tie-break.
inline std::size_t predict(const Matrix& w, const Eigen::Ref<const Vector>& x) {
  detail::check_example(w, x);
  return argmax_lowest(w * x);
}
inline std::size_t predict(const WeightMatrix& w, const Eigen::Ref<const Vector>& x) { return predict(w.entries(), x); }

inline double loss_example(const Matrix& w, const Eigen::Ref<const Vector>& x, std::size_t y) {
  detail::check_example(w, x);
  detail::require(y < static_cast<std::size_t>(w.rows()), "label out of range");
  return score_loss(w * x, y);
}
inline double loss_example(const WeightMatrix& w, const Eigen::Ref<const Vector>& x, std::size_t y) {
  return loss_example(w.entries(), x, y);
}

inline Vector rho(const Matrix& w, const Eigen::Ref<const Vector>& x, std::size_t y) {
  detail::check_example(w, x);
  detail::require(y < static_cast<std::size_t>(w.rows()), "label out of range");
  return score_rho(w * x, y);
}
inline Vector rho(const WeightMatrix& w, const Eigen::Ref<const Vector>& x, std::size_t y) { return rho(w.entries(), x, y); }

/// m x k matrix of scores XW^T.
inline Matrix scores(const Matrix& w, const Dataset& s) { return s.features() * w.transpose(); }

/// L(W) = (1/m) sum l(W,(x,y)) + reg(W).
inline double loss_avg(const Matrix& w, const Dataset& s, const Regularizer& reg = {}) {
  detail::check_dataset(w, s);
  return detail::mean_softmax_loss(scores(w, s), s.labels()) + reg.value(w);
}
inline double loss_avg(const WeightMatrix& w, const Dataset& s, const Regularizer& reg = {}) {
  return loss_avg(w.entries(), s, reg);
}

struct LossAndGradient {
  double value = 0.0;
  Matrix gradient;  // k x d
};

/// Value and k x d gradient in one pass: dL/dW_{q,r} = (1/m) sum x_r (rho_q - 1[q=y]) + reg'.
inline LossAndGradient loss_and_gradient(const Matrix& w, const Dataset& s, const Regularizer& reg = {}) {
  detail::check_dataset(w, s);
  Matrix residual;
  LossAndGradient out;
  out.value = detail::mean_softmax_loss(scores(w, s), s.labels(), &residual) + reg.value(w);
  out.gradient = residual.transpose() * s.features() / static_cast<double>(s.m());
  reg.add_gradient(w, out.gradient);
  return out;
}

inline Matrix gradient(const Matrix& w, const Dataset& s, const Regularizer& reg = {}) {
  return loss_and_gradient(w, s, reg).gradient;
}
inline Matrix gradient(const WeightMatrix& w, const Dataset& s, const Regularizer& reg = {}) {
  return gradient(w.entries(), s, reg);
}

/// l1 norm of every gradient column.
inline Vector column_scores(const Matrix& g) { return g.cwiseAbs().colwise().sum().transpose(); }

inline double zero_one_error(const Matrix& w, const Dataset& s) {
  detail::check_dataset(w, s);
  const Matrix sc = scores(w, s);
  std::size_t wrong = 0;
  for (Index i = 0; i < sc.rows(); ++i) {
    if (argmax_lowest(sc.row(i).transpose()) != s.label(static_cast<std::size_t>(i))) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(s.m());
}
inline double zero_one_error(const WeightMatrix& w, const Dataset& s) { return zero_one_error(w.entries(), s); }

}  // namespace shareboost
