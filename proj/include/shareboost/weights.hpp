#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "shareboost/dataset.hpp"

namespace shareboost {

/// k x d weight matrix with an explicit support: the selected columns.
/// Columns outside the support are exactly zero.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(std::size_t k, std::size_t d)
      : w_(Matrix::Zero(static_cast<Index>(k), static_cast<Index>(d))) {}

  /// Support is taken as the set of non-zero columns.
  static WeightMatrix from_dense(Matrix w) {
    WeightMatrix out;
    out.w_ = std::move(w);
    for (Index j = 0; j < out.w_.cols(); ++j) {
      if ((out.w_.col(j).array() != 0.0).any()) out.support_.push_back(static_cast<std::size_t>(j));
    }
    return out;
  }

  std::size_t k() const noexcept { return static_cast<std::size_t>(w_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(w_.cols()); }

  const Matrix& entries() const noexcept { return w_; }

  /// Selected columns in selection order.
  const std::vector<std::size_t>& support() const noexcept { return support_; }

  bool in_support(std::size_t j) const {
    return std::find(support_.begin(), support_.end(), j) != support_.end();
  }

  /// Adds j to the support; returns false if it was already there.
  bool add_to_support(std::size_t j) {
    detail::require(j < d(), "weights: column " + std::to_string(j) + " out of range");
    if (in_support(j)) return false;
    support_.push_back(j);
    return true;
  }

  void set_column(std::size_t j, const Vector& col) {
    detail::require(static_cast<Index>(col.size()) == w_.rows(), "weights: column length mismatch");
    if (!in_support(j)) {
      if ((col.array() == 0.0).all()) return;
      add_to_support(j);
    }
    w_.col(static_cast<Index>(j)) = col;
  }

  /// k x |support| block in support order.
  Matrix restricted() const {
    Matrix out(w_.rows(), static_cast<Index>(support_.size()));
    for (std::size_t c = 0; c < support_.size(); ++c) out.col(static_cast<Index>(c)) = w_.col(static_cast<Index>(support_[c]));
    return out;
  }

  /// Overwrites the supported columns from a k x |support| block.
  void assign_restricted(const Matrix& block) {
    detail::require(block.rows() == w_.rows() && block.cols() == static_cast<Index>(support_.size()),
                    "weights: restricted block shape mismatch");
    for (std::size_t c = 0; c < support_.size(); ++c) w_.col(static_cast<Index>(support_[c])) = block.col(static_cast<Index>(c));
  }

 private:
  Matrix w_;
  std::vector<std::size_t> support_;
};

enum class NormTag { one, two, inf, zero };

inline NormTag parse_norm_tag(const std::string& s) {
  if (s == "1") return NormTag::one;
  if (s == "2") return NormTag::two;
  if (s == "inf") return NormTag::inf;
  if (s == "0") return NormTag::zero;
  throw InputError("unsupported norm tag '" + s + "'");
}

namespace detail {

/// Neumaier-compensated sum.
inline double compensated_sum(const Vector& v) {
  double sum = 0.0, carry = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double t = sum + v(i);
    carry += std::abs(sum) >= std::abs(v(i)) ? (sum - t) + v(i) : (v(i) - t) + sum;
    sum = t;
  }
  return sum + carry;
}

inline double vector_norm(const Vector& v, NormTag tag) {
  switch (tag) {
    case NormTag::one: return compensated_sum(v.cwiseAbs());
    case NormTag::two: return std::sqrt(compensated_sum(v.cwiseAbs2()));
    case NormTag::inf: return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    case NormTag::zero: return static_cast<double>((v.array() != 0.0).count());
  }
  return 0.0;
}

}  // namespace detail

/// ||W||_{p,r}: p-norm of each column, then r-norm of the resulting d-vector.
/// p must be 1, 2 or inf; r may also be 0 (count of non-zero columns).
inline double mixed_norm(const Matrix& w, NormTag p, NormTag r) {
  detail::require(p != NormTag::zero, "mixed_norm: column norm p=0 is not supported");
  Vector cols(w.cols());
  for (Index j = 0; j < w.cols(); ++j) cols(j) = detail::vector_norm(w.col(j), p);
  return detail::vector_norm(cols, r);
}

inline double mixed_norm(const WeightMatrix& w, NormTag p, NormTag r) { return mixed_norm(w.entries(), p, r); }

}  // namespace shareboost
