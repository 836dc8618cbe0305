#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "shareboost/errors.hpp"

namespace shareboost {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct LabeledExample {
  Vector features;
  std::size_t label = 0;
};

/// m labeled examples stored row-wise (m x d) with labels in [0, k).
class Dataset {
 public:
  Dataset() = default;

  Dataset(Matrix features, std::vector<std::size_t> labels, std::size_t num_classes)
      : x_(std::move(features)), y_(std::move(labels)), k_(num_classes) {
    detail::require(static_cast<std::size_t>(x_.rows()) == y_.size(),
                    "dataset: feature rows (" + std::to_string(x_.rows()) +
                        ") != label count (" + std::to_string(y_.size()) + ")");
    detail::require(k_ >= 1, "dataset: class count must be >= 1");
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (y_[i] >= k_) {
        throw InputError("dataset: label " + std::to_string(y_[i]) + " at row " +
                         std::to_string(i) + " is not < k=" + std::to_string(k_));
      }
    }
    bounded_ = x_.size() == 0 || x_.cwiseAbs().maxCoeff() <= 1.0;
  }

  static Dataset from_examples(const std::vector<LabeledExample>& examples, std::size_t num_classes) {
    detail::require(!examples.empty(), "dataset: no examples");
    const Index d = examples.front().features.size();
    Matrix x(static_cast<Index>(examples.size()), d);
    std::vector<std::size_t> y(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
      detail::require(examples[i].features.size() == d,
                      "dataset: example " + std::to_string(i) + " has inconsistent length");
      x.row(static_cast<Index>(i)) = examples[i].features.transpose();
      y[i] = examples[i].label;
    }
    return Dataset(std::move(x), std::move(y), num_classes);
  }

  std::size_t m() const noexcept { return y_.size(); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  std::size_t k() const noexcept { return k_; }
  bool empty() const noexcept { return y_.empty(); }

  /// True iff every |x_ij| <= 1.
  bool bounded() const noexcept { return bounded_; }

  const Matrix& features() const noexcept { return x_; }
  const std::vector<std::size_t>& labels() const noexcept { return y_; }
  std::size_t label(std::size_t i) const { return y_[i]; }

  LabeledExample example(std::size_t i) const {
    return {x_.row(static_cast<Index>(i)).transpose(), y_[i]};
  }

  /// Copy restricted to the given rows.
  Dataset subset(const std::vector<std::size_t>& rows) const {
    Matrix x(static_cast<Index>(rows.size()), x_.cols());
    std::vector<std::size_t> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Index>(i)) = x_.row(static_cast<Index>(rows[i]));
      y[i] = y_[rows[i]];
    }
    return Dataset(std::move(x), std::move(y), k_);
  }

 private:
  Matrix x_;
  std::vector<std::size_t> y_;
  std::size_t k_ = 0;
  bool bounded_ = true;
};

/// m x k one-hot matrix of the labels.
inline Matrix one_hot(const Dataset& s) {
  Matrix y = Matrix::Zero(static_cast<Index>(s.m()), static_cast<Index>(s.k()));
  for (std::size_t i = 0; i < s.m(); ++i) y(static_cast<Index>(i), static_cast<Index>(s.label(i))) = 1.0;
  return y;
}

}  // namespace shareboost
