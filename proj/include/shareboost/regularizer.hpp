#pragma once

#include <cmath>
#include <string>

#include "shareboost/dataset.hpp"

namespace shareboost {

/// Smooth, column-separable penalty added to the average loss.
///   frobenius:          lambda * sum_ij W_ij^2
///   smooth_mixed_norm:  lambda * (1/beta) sum_j log sum_i (e^{beta W_ij} + e^{-beta W_ij})
struct Regularizer {
  enum class Kind { none, frobenius, smooth_mixed_norm };

  Kind kind = Kind::none;
  double lambda = 0.0;
  double beta = 100.0;

  static Regularizer none() { return {}; }
  static Regularizer frobenius(double lambda) { return {Kind::frobenius, lambda, 100.0}; }
  static Regularizer smooth_mixed_norm(double lambda, double beta = 100.0) {
    return {Kind::smooth_mixed_norm, lambda, beta};
  }

  void validate() const {
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "regularizer: lambda must be finite and >= 0");
    if (kind == Kind::smooth_mixed_norm) {
      detail::require(beta >= 1.0 && std::isfinite(beta), "regularizer: beta must be >= 1");
    }
  }

  bool active() const noexcept { return kind != Kind::none && lambda > 0.0; }

  /// Penalty of one column.
  double column_value(const Eigen::Ref<const Vector>& col) const {
    switch (kind) {
      case Kind::none: return 0.0;
      case Kind::frobenius: return lambda * col.squaredNorm();
      case Kind::smooth_mixed_norm: {
        if (lambda == 0.0) return 0.0;
        const double top = beta * (col.size() == 0 ? 0.0 : col.cwiseAbs().maxCoeff());
        double acc = 0.0;
        for (Index i = 0; i < col.size(); ++i) {
          acc += std::exp(beta * col(i) - top) + std::exp(-beta * col(i) - top);
        }
        return lambda * (top + std::log(acc)) / beta;
      }
    }
    return 0.0;
  }

  /// Adds d(penalty)/d(col) into out.
  void add_column_gradient(const Eigen::Ref<const Vector>& col, Eigen::Ref<Vector> out) const {
    switch (kind) {
      case Kind::none: return;
      case Kind::frobenius: out += 2.0 * lambda * col; return;
      case Kind::smooth_mixed_norm: {
        if (lambda == 0.0) return;
        const double top = beta * (col.size() == 0 ? 0.0 : col.cwiseAbs().maxCoeff());
        Vector plus = (beta * col.array() - top).exp().matrix();
        Vector minus = (-beta * col.array() - top).exp().matrix();
        const double z = plus.sum() + minus.sum();
        out += lambda * (plus - minus) / z;
        return;
      }
    }
  }

  double value(const Matrix& w) const {
    if (kind == Kind::none) return 0.0;
    double acc = 0.0;
    for (Index j = 0; j < w.cols(); ++j) acc += column_value(w.col(j));
    return acc;
  }

  /// value(b) - value(a).
  double difference(const Matrix& a, const Matrix& b) const {
    switch (kind) {
      case Kind::none: return 0.0;
      case Kind::frobenius: return lambda * ((b - a).array() * (b + a).array()).sum();
      case Kind::smooth_mixed_norm: {
        double acc = 0.0;
        for (Index j = 0; j < a.cols(); ++j) acc += column_value(b.col(j)) - column_value(a.col(j));
        return acc;
      }
    }
    return 0.0;
  }

  void add_gradient(const Matrix& w, Matrix& g) const {
    if (kind == Kind::none) return;
    for (Index j = 0; j < w.cols(); ++j) {
      Vector gj = g.col(j);
      add_column_gradient(w.col(j), gj);
      g.col(j) = gj;
    }
  }
};

inline std::string to_string(Regularizer::Kind kind) {
  switch (kind) {
    case Regularizer::Kind::none: return "none";
    case Regularizer::Kind::frobenius: return "frob";
    case Regularizer::Kind::smooth_mixed_norm: return "sminf1";
  }
  return "none";
}

inline Regularizer::Kind parse_regularizer_kind(const std::string& s) {
  if (s == "none") return Regularizer::Kind::none;
  if (s == "frob" || s == "frobenius") return Regularizer::Kind::frobenius;
  if (s == "sminf1" || s == "smooth_mixed_norm") return Regularizer::Kind::smooth_mixed_norm;
  throw InputError("unknown regularizer '" + s + "'");
}

}  // namespace shareboost
