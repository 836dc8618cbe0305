#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "shareboost/dataset.hpp"
#include "shareboost/loss.hpp"

namespace shareboost {

/// Binary feature 1[v_i <= theta].
struct Stump {
  std::size_t raw_feature = 0;
  double threshold = 0.0;

  double operator()(const Eigen::Ref<const Vector>& v) const {
    return v(static_cast<Index>(raw_feature)) <= threshold ? 1.0 : 0.0;
  }
  bool operator==(const Stump&) const = default;
};

/// Pieces of a piecewise-linear map: row j of centers with radius radii(j).
struct AnchorSet {
  Matrix centers;  // q x p
  Vector radii;    // q

  std::size_t size() const { return static_cast<std::size_t>(centers.rows()); }
  std::size_t raw_dimension() const { return static_cast<std::size_t>(centers.cols()); }

  void validate() const {
    detail::require(centers.rows() >= 1, "anchors: need at least one anchor");
    detail::require(radii.size() == centers.rows(), "anchors: one radius per center required");
    for (Index j = 0; j < radii.size(); ++j) {
      detail::require(radii(j) > 0.0, "anchors: radius " + std::to_string(j) + " is not positive");
    }
  }
};

enum class MapKind { identity, stumps, quadratic, anchors };

inline std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::identity: return "identity";
    case MapKind::stumps: return "stumps";
    case MapKind::quadratic: return "quadratic";
    case MapKind::anchors: return "anchors";
  }
  return "?";
}

inline MapKind parse_map_kind(const std::string& s) {
  if (s == "identity") return MapKind::identity;
  if (s == "stumps") return MapKind::stumps;
  if (s == "quadratic") return MapKind::quadratic;
  if (s == "anchors") return MapKind::anchors;
  throw InputError("unknown feature map '" + s + "'");
}

using FeatureGroups = std::vector<std::vector<std::size_t>>;

/// How raw vectors v (length p) become model features x.
struct FeatureMapDescriptor {
  MapKind kind = MapKind::identity;
  std::size_t raw_dimension = 0;
  std::vector<Stump> stumps;
  AnchorSet anchors;

  static FeatureMapDescriptor identity(std::size_t p) { return {MapKind::identity, p, {}, {}}; }
  static FeatureMapDescriptor quadratic(std::size_t p) { return {MapKind::quadratic, p, {}, {}}; }
  static FeatureMapDescriptor from_stumps(std::size_t p, std::vector<Stump> list) {
    for (const Stump& st : list) {
      detail::require(st.raw_feature < p, "stumps: raw feature " + std::to_string(st.raw_feature) + " out of range");
    }
    return {MapKind::stumps, p, std::move(list), {}};
  }
  static FeatureMapDescriptor from_anchors(AnchorSet set) {
    set.validate();
    const std::size_t p = set.raw_dimension();
    return {MapKind::anchors, p, {}, std::move(set)};
  }

  std::size_t output_dimension() const {
    const std::size_t p = raw_dimension;
    switch (kind) {
      case MapKind::identity: return p;
      case MapKind::stumps: return stumps.size();
      case MapKind::quadratic: return p + p * (p + 1) / 2;
      case MapKind::anchors: return anchors.size() * (p + 1);
    }
    return 0;
  }

  /// Anchors: one group of p+1 consecutive columns per anchor. Other maps have no groups.
  std::optional<FeatureGroups> groups() const {
    if (kind != MapKind::anchors) return std::nullopt;
    const std::size_t w = raw_dimension + 1;
    FeatureGroups g(anchors.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j].resize(w);
      std::iota(g[j].begin(), g[j].end(), j * w);
    }
    return g;
  }
};

inline Vector apply_map(const FeatureMapDescriptor& desc, const Eigen::Ref<const Vector>& v) {
  detail::require(static_cast<std::size_t>(v.size()) == desc.raw_dimension,
                  "feature map: input has length " + std::to_string(v.size()) + ", expected " +
                      std::to_string(desc.raw_dimension));
  const Index p = v.size();
  switch (desc.kind) {
    case MapKind::identity: return v;
    case MapKind::stumps: {
      Vector x(static_cast<Index>(desc.stumps.size()));
      for (std::size_t j = 0; j < desc.stumps.size(); ++j) x(static_cast<Index>(j)) = desc.stumps[j](v);
      return x;
    }
    case MapKind::quadratic: {
      Vector x(static_cast<Index>(desc.output_dimension()));
      x.head(p) = v;
      Index o = p;
      for (Index i = 0; i < p; ++i) {
        for (Index j = i; j < p; ++j) x(o++) = v(i) * v(j);
      }
      return x;
    }
    case MapKind::anchors: {
      Vector x = Vector::Zero(static_cast<Index>(desc.output_dimension()));
      for (Index j = 0; j < desc.anchors.centers.rows(); ++j) {
        if ((v - desc.anchors.centers.row(j).transpose()).norm() < desc.anchors.radii(j)) {
          x.segment(j * (p + 1), p) = v;
          x(j * (p + 1) + p) = 1.0;
        }
      }
      return x;
    }
  }
  return v;
}

/// Row-wise map of an m x p matrix.
inline Matrix apply_map_rows(const FeatureMapDescriptor& desc, const Matrix& raw) {
  if (desc.kind == MapKind::identity) {
    detail::require(static_cast<std::size_t>(raw.cols()) == desc.raw_dimension, "feature map: raw dimension mismatch");
    return raw;
  }
  Matrix out(raw.rows(), static_cast<Index>(desc.output_dimension()));
  for (Index i = 0; i < raw.rows(); ++i) out.row(i) = apply_map(desc, Vector(raw.row(i).transpose())).transpose();
  return out;
}

inline Dataset apply_map(const FeatureMapDescriptor& desc, const Dataset& s) {
  return Dataset(apply_map_rows(desc, s.features()), s.labels(), s.k());
}

struct StumpChoice {
  Stump stump;
  double score = 0.0;
};

namespace detail {

inline std::size_t resolve_threads(std::size_t threads, std::size_t work) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(threads, work));
}

/// Best threshold of one raw feature given the residual rho - onehot (m x k).
inline StumpChoice scan_feature(const Matrix& raw, const Matrix& residual, std::size_t feature) {
  const Index m = raw.rows();
  const Index k = residual.cols();
  const Index f = static_cast<Index>(feature);
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return raw(a, f) < raw(b, f); });

  const double inv_m = 1.0 / static_cast<double>(m);
  // theta below the minimum selects no example: score 0.
  StumpChoice best{{feature, raw(order.front(), f) - 1.0}, 0.0};
  Vector acc = Vector::Zero(k);
  for (Index n = 0; n < m;) {
    const double v = raw(order[static_cast<std::size_t>(n)], f);
    while (n < m && raw(order[static_cast<std::size_t>(n)], f) == v) {
      acc += residual.row(order[static_cast<std::size_t>(n)]).transpose();
      ++n;
    }
    const double theta = n < m ? 0.5 * (v + raw(order[static_cast<std::size_t>(n)], f)) : v + 1.0;
    const double score = acc.cwiseAbs().sum() * inv_m;
    if (score > best.score) best = {{feature, theta}, score};
  }
  return best;
}

}  // namespace detail

/// Best stump over every raw feature and every candidate threshold (below the minimum,
/// midpoints of consecutive distinct values, above the maximum), scored by the l1 norm of
/// the gradient column the stump would have. Ties go to the lowest feature, then the lowest
/// threshold. threads = 0 uses the hardware concurrency.
inline StumpChoice best_stump(const Matrix& raw, const Matrix& residual, std::size_t threads = 1) {
  detail::require(raw.rows() >= 1 && raw.cols() >= 1, "best_stump: raw dataset is empty");
  detail::require(residual.rows() == raw.rows(), "best_stump: residual rows differ from raw rows");
  const std::size_t p = static_cast<std::size_t>(raw.cols());
  std::vector<StumpChoice> per(p);
  const std::size_t nt = detail::resolve_threads(threads, p);
  if (nt == 1) {
    for (std::size_t i = 0; i < p; ++i) per[i] = detail::scan_feature(raw, residual, i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < p; i += nt) per[i] = detail::scan_feature(raw, residual, i);
      });
    }
    for (auto& th : pool) th.join();
  }
  StumpChoice best = per[0];
  for (std::size_t i = 1; i < p; ++i) {
    if (per[i].score > best.score) best = per[i];
  }
  return best;
}

/// Same, with the residual derived from the current m x k score matrix.
inline StumpChoice best_stump(const Dataset& raw, const Matrix& current_scores, std::size_t threads = 1) {
  detail::require(!raw.empty(), "best_stump: raw dataset is empty");
  detail::require(static_cast<std::size_t>(current_scores.rows()) == raw.m() &&
                      static_cast<std::size_t>(current_scores.cols()) == raw.k(),
                  "best_stump: score matrix must be m x k");
  Matrix residual;
  detail::mean_softmax_loss(current_scores, raw.labels(), &residual);
  return best_stump(raw.features(), residual, threads);
}

struct KMeansResult {
  Matrix centers;                        // q x p
  std::vector<std::size_t> assignment;   // nearest center per point
  double inertia = 0.0;                  // sum of squared distances to assigned centers
  std::vector<double> inertia_history;   // after each assignment step
  std::size_t iterations = 0;
};

namespace detail {

inline std::size_t count_distinct_rows(const Matrix& pts) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(pts.rows()));
  for (Index i = 0; i < pts.rows(); ++i) {
    for (Index j = 0; j < pts.cols(); ++j) rows[static_cast<std::size_t>(i)].push_back(pts(i, j));
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

inline double assign(const Matrix& pts, const Matrix& centers, std::vector<std::size_t>& a, Vector& dist2) {
  double inertia = 0.0;
  for (Index i = 0; i < pts.rows(); ++i) {
    Index best = 0;
    double bd = (pts.row(i) - centers.row(0)).squaredNorm();
    for (Index c = 1; c < centers.rows(); ++c) {
      const double dd = (pts.row(i) - centers.row(c)).squaredNorm();
      if (dd < bd) { bd = dd; best = c; }
    }
    a[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    dist2(i) = bd;
    inertia += bd;
  }
  return inertia;
}

}  // namespace detail

/// k-means++ seeding followed by Lloyd iterations until no center moves by 1e-6 or more
/// (at most max_iterations). An empty cluster is re-seeded at the point farthest from its center.
inline KMeansResult kmeans(const Matrix& points, std::size_t q, std::uint64_t seed, std::size_t max_iterations = 100) {
  detail::require(q >= 1, "kmeans: need q >= 1");
  detail::require(points.rows() >= 1, "kmeans: no points");
  const std::size_t distinct = detail::count_distinct_rows(points);
  detail::require(q <= distinct, "kmeans: q=" + std::to_string(q) + " exceeds the " + std::to_string(distinct) +
                                     " distinct points");
  const Index n = points.rows();
  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centers.resize(static_cast<Index>(q), points.cols());

  std::uniform_int_distribution<Index> pick(0, n - 1);
  res.centers.row(0) = points.row(pick(rng));
  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (points.row(i) - res.centers.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index c = 1; c < static_cast<Index>(q); ++c) {
    const double total = d2.sum();
    double target = unit(rng) * total;
    Index chosen = -1;
    for (Index i = 0; i < n; ++i) {
      if (d2(i) <= 0.0) continue;
      chosen = i;
      target -= d2(i);
      if (target < 0.0) break;
    }
    res.centers.row(c) = points.row(chosen);
    for (Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (points.row(i) - res.centers.row(c)).squaredNorm());
  }

  res.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    res.iterations = it;
    res.inertia = detail::assign(points, res.centers, res.assignment, d2);
    res.inertia_history.push_back(res.inertia);
    Matrix sums = Matrix::Zero(res.centers.rows(), res.centers.cols());
    std::vector<std::size_t> counts(q, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(static_cast<Index>(res.assignment[static_cast<std::size_t>(i)])) += points.row(i);
      ++counts[res.assignment[static_cast<std::size_t>(i)]];
    }
    double moved = 0.0;
    for (std::size_t c = 0; c < q; ++c) {
      Vector next;
      if (counts[c] > 0) {
        next = sums.row(static_cast<Index>(c)).transpose() / static_cast<double>(counts[c]);
      } else {
        Index far = 0;
        d2.maxCoeff(&far);
        next = points.row(far).transpose();
        d2(far) = 0.0;
      }
      moved = std::max(moved, (next.transpose() - res.centers.row(static_cast<Index>(c))).norm());
      res.centers.row(static_cast<Index>(c)) = next.transpose();
    }
    if (moved < 1e-6) break;
  }
  res.inertia = detail::assign(points, res.centers, res.assignment, d2);
  return res;
}

/// Type-7 sample quantile (linear interpolation between order statistics) of sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Anchors from k-means centers of the raw examples, one anchor per (center, quantile)
/// pair with the radius set to that quantile of the center's distances to the training points.
inline FeatureMapDescriptor build_anchor_map(const Matrix& raw, std::size_t q, const std::vector<double>& quantiles,
                                             std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  detail::require(!quantiles.empty(), "anchors: need at least one radius quantile");
  for (double a : quantiles) detail::require(a > 0.0 && a < 1.0, "anchors: quantiles must lie in (0,1)");
  const KMeansResult km = kmeans(raw, q, seed);
  std::vector<Vector> centers;
  std::vector<double> radii;
  for (Index c = 0; c < km.centers.rows(); ++c) {
    std::vector<double> dist(static_cast<std::size_t>(raw.rows()));
    for (Index i = 0; i < raw.rows(); ++i) dist[static_cast<std::size_t>(i)] = (raw.row(i) - km.centers.row(c)).norm();
    std::sort(dist.begin(), dist.end());
    if (dist.front() == dist.back()) {
      // every point at the same distance: one piece that just covers them all
      centers.push_back(km.centers.row(c).transpose());
      radii.push_back(std::nextafter(std::max(dist.back(), 0.0), std::numeric_limits<double>::infinity()));
      if (warnings) warnings->push_back("anchors: center " + std::to_string(c) + " has a degenerate distance distribution; using a single radius");
      continue;
    }
    for (double a : quantiles) {
      double r = quantile_sorted(dist, a);
      if (r <= 0.0) {
        r = std::nextafter(0.0, 1.0);
        if (warnings) warnings->push_back("anchors: zero radius at center " + std::to_string(c) + " raised to the smallest positive value");
      }
      centers.push_back(km.centers.row(c).transpose());
      radii.push_back(r);
    }
  }
  AnchorSet set;
  set.centers.resize(static_cast<Index>(centers.size()), raw.cols());
  set.radii.resize(static_cast<Index>(radii.size()));
  for (std::size_t j = 0; j < centers.size(); ++j) {
    set.centers.row(static_cast<Index>(j)) = centers[j].transpose();
    set.radii(static_cast<Index>(j)) = radii[j];
  }
  return FeatureMapDescriptor::from_anchors(std::move(set));
}

inline FeatureMapDescriptor build_anchor_map(const Dataset& raw, std::size_t q, const std::vector<double>& quantiles,
                                             std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  return build_anchor_map(raw.features(), q, quantiles, seed, warnings);
}

}  // namespace shareboost
