#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "shareboost/dataset.hpp"

namespace shareboost {

struct SolverConfig {
  double tolerance = 1e-8;           // stop when the (proximal) gradient inf-norm is <= this
  std::size_t max_iterations = 10000;
  double shrink = 0.5;               // backtracking factor
  double initial_step = 1.0;

  void validate() const {
    detail::require(tolerance > 0.0, "solver: tolerance must be > 0");
    detail::require(max_iterations >= 1, "solver: max_iterations must be >= 1");
    detail::require(shrink > 0.0 && shrink < 1.0, "solver: shrink factor must lie in (0,1)");
    detail::require(initial_step > 0.0, "solver: initial step must be > 0");
  }
};

struct SolverResult {
  Vector point;
  std::size_t iterations = 0;
  double final_gradient_norm = 0.0;
  bool converged = false;
  double value = 0.0;  // smooth part plus prox term at point
};

/// An accepted backtracking step from y to z with step size eta.
struct SolverStep {
  const Vector& from;
  double from_value;
  const Vector& from_gradient;
  const Vector& to;
  double value_change;  // f(to) - f(from)
  double step;
};

/// Value + gradient oracle over a flat parameter vector.
template <class F>
concept SmoothObjective = requires(const F& f, const Vector& x, Vector& g) {
  { f.dimension() } -> std::convertible_to<std::size_t>;
  { f.value(x) } -> std::convertible_to<double>;
  { f.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

/// Objectives that can evaluate f(b) - f(a) without cancellation. Near an optimum the
/// decrease of a step drops below the rounding error of f itself, so the line search
/// compares differences instead of values when this is available.
template <class F>
concept HasValueDifference = requires(const F& f, const Vector& a, const Vector& b) {
  { f.value_difference(a, b) } -> std::convertible_to<double>;
};

/// Adapts a pair of callables to SmoothObjective.
class FunctionObjective {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionObjective(std::size_t dimension, ValueFn value, GradientFn gradient)
      : dim_(dimension), value_(std::move(value)), gradient_(std::move(gradient)) {}

  std::size_t dimension() const { return dim_; }
  double value(const Vector& x) const { return value_(x); }
  double value_and_gradient(const Vector& x, Vector& g) const {
    g = gradient_(x);
    return value_(x);
  }

 private:
  std::size_t dim_;
  ValueFn value_;
  GradientFn gradient_;
};

/// Identity prox: plain smooth minimization.
struct NoProx {
  Vector operator()(const Vector& v, double /*step*/) const { return v; }
  double value(const Vector& /*x*/) const { return 0.0; }
};

/// Prox of lambda * ||x||_1: soft thresholding at step * lambda.
struct L1Prox {
  double lambda = 0.0;

  Vector operator()(const Vector& v, double step) const {
    const double t = step * lambda;
    return v.unaryExpr([t](double a) { return a > t ? a - t : (a < -t ? a + t : 0.0); });
  }
  double value(const Vector& x) const { return lambda * x.cwiseAbs().sum(); }
};

namespace detail {

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

template <class F>
double value_change(const F& obj, const Vector& from, double from_value, const Vector& to) {
  if constexpr (HasValueDifference<F>) {
    return obj.value_difference(from, to);
  } else {
    return obj.value(to) - from_value;
  }
}

inline double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

template <class Prox>
double stationarity(const Vector& x, const Vector& g, double step, const Prox& prox) {
  if constexpr (std::is_same_v<Prox, NoProx>) {
    return inf_norm(g);
  } else {
    return inf_norm((x - prox(x - step * g, step)) / step);
  }
}

}  // namespace detail

/// Accelerated proximal gradient with backtracking and function-value restart.
///
/// Each step from the extrapolated point y is accepted once
///   f(z) <= f(y) + <grad f(y), z - y> + ||z - y||^2 / (2 eta).
/// The step size is tentatively doubled (divided by shrink) every iteration so it can track
/// the local curvature, which matters on separable logistic problems where it decays with
/// the loss. Whenever a candidate raises f + h above the current iterate the momentum is
/// dropped and the step is retried from the iterate, so the returned point never has a
/// larger objective than init.
template <SmoothObjective F, class Prox>
SolverResult minimize_composite(const F& obj, const Prox& prox, const Vector& init, const SolverConfig& cfg,
                                const std::function<void(const SolverStep&)>& on_step = {}) {
  cfg.validate();
  detail::require(static_cast<std::size_t>(init.size()) == obj.dimension(),
                  "solver: init has " + std::to_string(init.size()) + " entries, objective dimension is " +
                      std::to_string(obj.dimension()));

  Vector x = init;
  Vector gx(x.size());
  double fx = obj.value_and_gradient(x, gx);
  if (!std::isfinite(fx) || !gx.allFinite()) {
    throw NumericalError("solver: non-finite value or gradient at initial point", detail::to_std(x));
  }
  double big_fx = fx + prox.value(x);
  double eta = cfg.initial_step;

  SolverResult res;
  auto finish = [&](bool converged, double stat) {
    res.point = x;
    res.value = big_fx;
    res.final_gradient_norm = stat;
    res.converged = converged;
    return res;
  };

  double stat = detail::stationarity(x, gx, eta, prox);
  if (stat <= cfg.tolerance) return finish(true, stat);

  Vector y = x, gy = gx, x_prev, z, diff;
  double fy = fx;
  double rise_to_y = 0.0;  // F(y) - F(x)
  double t = 1.0;
  bool momentum = false;
  constexpr int kMaxBacktracks = 200;

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    res.iterations = it;
    double step = eta / cfg.shrink;
    double dfz = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      z = prox(y - step * gy, step);
      diff = z - y;
      const double sq = diff.squaredNorm();
      if (sq == 0.0) {
        dfz = 0.0;
        accepted = true;
        break;
      }
      dfz = detail::value_change(obj, y, fy, z);
      if (std::isfinite(dfz) && dfz <= gy.dot(diff) + sq / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= cfg.shrink;
    }
    if (!accepted) {
      if (momentum) {
        y = x; gy = gx; fy = fx; rise_to_y = 0.0; t = 1.0; momentum = false;
        continue;
      }
      break;  // no representable descent step from x
    }
    eta = step;
    if (on_step) on_step(SolverStep{y, fy, gy, z, dfz, step});

    // F(z) - F(x) = (F(y) - F(x)) + (F(z) - F(y)), each measured as a difference.
    const double rise = rise_to_y + dfz + prox.value(z) - prox.value(y);
    if (rise > 0.0 || z == x) {
      if (momentum) {
        y = x; gy = gx; fy = fx; rise_to_y = 0.0; t = 1.0; momentum = false;
        continue;
      }
      break;  // stagnated
    }

    x_prev.swap(x);
    x = z;
    fx = obj.value_and_gradient(x, gx);
    if (!std::isfinite(fx) || !gx.allFinite()) {
      throw NumericalError("solver: non-finite value or gradient", detail::to_std(x));
    }
    big_fx = fx + prox.value(x);
    stat = detail::stationarity(x, gx, eta, prox);
    if (stat <= cfg.tolerance) return finish(true, stat);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    t = t_next;
    if (beta == 0.0) {
      y = x; gy = gx; fy = fx; rise_to_y = 0.0; momentum = false;
    } else {
      y = x + beta * (x - x_prev);
      rise_to_y = detail::value_change(obj, x, fx, y) + prox.value(y) - prox.value(x);
      fy = obj.value_and_gradient(y, gy);
      momentum = true;
      if (!std::isfinite(fy) || !gy.allFinite() || !std::isfinite(rise_to_y)) {
        y = x; gy = gx; fy = fx; rise_to_y = 0.0; t = 1.0; momentum = false;
      }
    }
  }
  stat = detail::stationarity(x, gx, eta, prox);
  return finish(stat <= cfg.tolerance, stat);
}

template <SmoothObjective F>
SolverResult minimize_smooth(const F& obj, const Vector& init, const SolverConfig& cfg = {},
                             const std::function<void(const SolverStep&)>& on_step = {}) {
  return minimize_composite(obj, NoProx{}, init, cfg, on_step);
}

}  // namespace shareboost
