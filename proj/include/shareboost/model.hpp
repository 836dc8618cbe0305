#pragma once

#include <cstddef>
#include <vector>

#include "shareboost/dataset.hpp"
#include "shareboost/feature_maps.hpp"
#include "shareboost/loss.hpp"
#include "shareboost/weights.hpp"

namespace shareboost {

/// Per-feature affine map x' = (x - shift) * scale.
struct ScalingTransform {
  Vector shift;
  Vector scale;

  static ScalingTransform identity(std::size_t d) {
    return {Vector::Zero(static_cast<Index>(d)), Vector::Ones(static_cast<Index>(d))};
  }

  std::size_t dimension() const { return static_cast<std::size_t>(shift.size()); }

  bool is_identity() const {
    return (shift.array() == 0.0).all() && (scale.array() == 1.0).all();
  }

  Vector apply(const Eigen::Ref<const Vector>& x) const {
    detail::require(x.size() == shift.size(), "scaling: input has length " + std::to_string(x.size()) +
                                                  ", expected " + std::to_string(shift.size()));
    return ((x - shift).array() * scale.array()).matrix();
  }

  Matrix apply_rows(const Matrix& x) const {
    detail::require(x.cols() == shift.size(), "scaling: input has " + std::to_string(x.cols()) +
                                                  " columns, expected " + std::to_string(shift.size()));
    return ((x.rowwise() - shift.transpose()).array().rowwise() * scale.transpose().array()).matrix();
  }

  Dataset apply(const Dataset& s) const { return Dataset(apply_rows(s.features()), s.labels(), s.k()); }
};

/// Maps each feature's training range [lo, hi] onto [-1, 1]; constant features go to 0
/// (scale 0). With identity = true the transform is the identity.
inline std::pair<Dataset, ScalingTransform> scale_features(const Dataset& s, bool identity = false) {
  if (identity || s.empty()) {
    ScalingTransform t = ScalingTransform::identity(s.d());
    return {s, t};
  }
  const Vector lo = s.features().colwise().minCoeff().transpose();
  const Vector hi = s.features().colwise().maxCoeff().transpose();
  ScalingTransform t;
  t.shift = 0.5 * (lo + hi);
  t.scale.resize(lo.size());
  for (Index j = 0; j < lo.size(); ++j) t.scale(j) = hi(j) > lo(j) ? 2.0 / (hi(j) - lo(j)) : 0.0;
  Matrix x = t.apply_rows(s.features());
  // guard the endpoints against rounding just past +-1
  x = x.cwiseMax(-1.0).cwiseMin(1.0);
  return {Dataset(std::move(x), s.labels(), s.k()), t};
}

/// A trained predictor on raw inputs: scale, then map, then argmax of W x.
struct WeightModel {
  WeightMatrix weights;
  FeatureMapDescriptor map;
  ScalingTransform scaling;

  std::size_t k() const { return weights.k(); }
  std::size_t raw_dimension() const { return scaling.dimension(); }

  void validate() const {
    detail::require(scaling.dimension() == map.raw_dimension, "model: scaling and feature map dimensions differ");
    detail::require(map.output_dimension() == weights.d(), "model: feature map output does not match weight columns");
  }

  Vector features(const Eigen::Ref<const Vector>& raw) const { return apply_map(map, scaling.apply(raw)); }
  Matrix features_rows(const Matrix& raw) const { return apply_map_rows(map, scaling.apply_rows(raw)); }
  Dataset features(const Dataset& raw) const {
    detail::require(raw.d() == raw_dimension(), "model: dataset has d=" + std::to_string(raw.d()) +
                                                    ", model expects " + std::to_string(raw_dimension()));
    detail::require(raw.k() <= k(), "model: dataset has more classes than the model");
    return Dataset(features_rows(raw.features()), raw.labels(), k());
  }

  std::size_t predict(const Eigen::Ref<const Vector>& raw) const { return shareboost::predict(weights, features(raw)); }

  std::vector<std::size_t> predict_rows(const Matrix& raw) const {
    detail::require(static_cast<std::size_t>(raw.cols()) == raw_dimension(),
                    "model: input has " + std::to_string(raw.cols()) + " features, model expects " +
                        std::to_string(raw_dimension()));
    const Matrix s = features_rows(raw) * weights.entries().transpose();
    std::vector<std::size_t> out(static_cast<std::size_t>(raw.rows()));
    for (Index i = 0; i < raw.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_lowest(s.row(i).transpose());
    return out;
  }
};

}  // namespace shareboost
