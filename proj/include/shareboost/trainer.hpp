#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "shareboost/dataset.hpp"
#include "shareboost/loss.hpp"
#include "shareboost/regularizer.hpp"
#include "shareboost/solver.hpp"
#include "shareboost/weights.hpp"

namespace shareboost {

enum class SelectionRule {
  grad_l1,                   // argmax_r ||grad_r L(W)||_1
  best_column_refit,         // argmin_r min over support I+{r} of L
  single_column_linesearch,  // argmin_r min_alpha L(W + alpha grad_r L(W) e_r^T)
  single_column_vector,      // argmin_r min_w L(W + w e_r^T)
};

inline std::string to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::grad_l1: return "grad";
    case SelectionRule::best_column_refit: return "refit";
    case SelectionRule::single_column_linesearch: return "linesearch";
    case SelectionRule::single_column_vector: return "vector";
  }
  return "grad";
}

inline SelectionRule parse_selection_rule(const std::string& s) {
  if (s == "grad" || s == "grad_l1") return SelectionRule::grad_l1;
  if (s == "refit" || s == "best_column_refit") return SelectionRule::best_column_refit;
  if (s == "linesearch" || s == "single_column_linesearch") return SelectionRule::single_column_linesearch;
  if (s == "vector" || s == "single_column_vector") return SelectionRule::single_column_vector;
  throw InputError("unknown selection rule '" + s + "'");
}

using FeatureGroups = std::vector<std::vector<std::size_t>>;

struct RoundRecord {
  std::size_t round = 0;              // 1-based
  std::size_t selected = 0;           // feature index, or group id under group selection
  std::vector<std::size_t> columns;   // columns added to the support this round (empty on re-selection)
  double score = 0.0;                 // selected column (or group) score
  double train_loss = 0.0;            // after the corrective step
  double train_error = 0.0;
  double heldout_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t support_size = 0;
  bool solver_converged = false;
  double solver_gradient_norm = 0.0;
  std::size_t solver_iterations = 0;
  std::string warning;
};

struct TrainConfig {
  std::size_t rounds = 10;  // T
  SelectionRule rule = SelectionRule::grad_l1;
  Regularizer reg;
  std::optional<FeatureGroups> groups;
  SolverConfig solver;
  double early_stop_score = 1e-10;
  double corrective_tolerance = 1e-8;
  // called after every round; returning false ends training
  std::function<bool(const RoundRecord&)> on_round;

  SolverConfig corrective_solver() const {
    SolverConfig c = solver;
    c.tolerance = corrective_tolerance;
    return c;
  }

  void validate(std::size_t d) const {
    detail::require(rounds >= 1, "train: T must be >= 1");
    detail::require(early_stop_score >= 0.0, "train: early_stop_score must be >= 0");
    detail::require(corrective_tolerance > 0.0, "train: corrective_tolerance must be > 0");
    reg.validate();
    solver.validate();
    if (groups) {
      std::vector<int> seen(d, 0);
      for (const auto& g : *groups) {
        detail::require(!g.empty(), "train: empty feature group");
        for (std::size_t j : g) {
          detail::require(j < d, "train: group member " + std::to_string(j) + " out of range");
          detail::require(seen[j]++ == 0, "train: feature " + std::to_string(j) + " appears in two groups");
        }
      }
      for (std::size_t j = 0; j < d; ++j) {
        detail::require(seen[j] == 1, "train: groups do not cover feature " + std::to_string(j));
      }
    }
  }
};


struct TrainTrace {
  double initial_loss = 0.0;   // L(0)
  double initial_error = 0.0;
  bool stopped_early = false;
  std::vector<RoundRecord> rounds;
};

struct TrainResult {
  WeightMatrix weights;
  TrainTrace trace;
};

namespace detail {

inline Matrix gather_columns(const Matrix& x, const std::vector<std::size_t>& cols) {
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = x.col(static_cast<Index>(cols[c]));
  return out;
}

}  // namespace detail

namespace detail {

/// Caches the scores and soft-max probabilities of the last point whose gradient was taken,
/// so that a following value_difference from that point costs one transcendental pass.
class SoftmaxCache {
 public:
  SoftmaxCache(const std::vector<std::size_t>& labels, Index k) : margin_(margins(labels, k)) {}

  const Matrix& margin() const { return margin_; }

  /// Loss at scores (for point key); residual = rho - onehot.
  double value_and_residual(const Vector& key, Matrix scores, Matrix& residual) const {
    prob_.resize(scores.rows(), scores.cols());
    const double v = softmax_rows(scores, margin_, prob_);
    residual = prob_;
    residual.array() -= 1.0 - margin_.array();
    key_ = key;
    scores_ = std::move(scores);
    return v;
  }

  double value(const Matrix& scores) const {
    work_.resize(scores.rows(), scores.cols());
    return softmax_rows(scores, margin_, work_);
  }

  /// Loss change from point a (scores_a computed on demand on a cache miss) to scores_b.
  template <class ScoresOf>
  double change(const Vector& a, const ScoresOf& scores_of, const Matrix& scores_b) const {
    if (key_.size() != a.size() || key_ != a) {
      Matrix residual;
      value_and_residual(a, scores_of(a), residual);
    }
    return mean_softmax_loss_change(prob_, scores_, scores_b, margin_, work_);
  }

 private:
  Matrix margin_;
  mutable Vector key_;
  mutable Matrix scores_, prob_, work_;
};

}  // namespace detail

/// L restricted to a column subset: parameters are the k x t block (column-major) over the
/// gathered design columns. Not thread-safe (keeps a scratch cache); use one per solve.
class RestrictedObjective {
 public:
  RestrictedObjective(Matrix design, const std::vector<std::size_t>& labels, std::size_t k, Regularizer reg)
      : x_(std::move(design)), cache_(labels, static_cast<Index>(k)), k_(static_cast<Index>(k)), reg_(reg) {}

  std::size_t dimension() const { return static_cast<std::size_t>(k_ * x_.cols()); }

  double value(const Vector& p) const {
    const Matrix w = as_matrix(p);
    return cache_.value(scores_of(p)) + reg_.value(w);
  }

  double value_and_gradient(const Vector& p, Vector& g) const {
    const Matrix w = as_matrix(p);
    Matrix residual;
    const double v = cache_.value_and_residual(p, scores_of(p), residual) + reg_.value(w);
    Matrix gm = residual.transpose() * x_ / static_cast<double>(x_.rows());
    reg_.add_gradient(w, gm);
    g = Eigen::Map<const Vector>(gm.data(), gm.size());
    return v;
  }

  double value_difference(const Vector& a, const Vector& b) const {
    auto scores = [this](const Vector& p) { return scores_of(p); };
    return cache_.change(a, scores, scores_of(b)) + reg_.difference(as_matrix(a), as_matrix(b));
  }

  Matrix as_matrix(const Vector& p) const { return Eigen::Map<const Matrix>(p.data(), k_, x_.cols()); }

 private:
  Matrix scores_of(const Vector& p) const { return x_ * as_matrix(p).transpose(); }

  Matrix x_;
  detail::SoftmaxCache cache_;
  Index k_;
  Regularizer reg_;
};

/// L as a function of a single column change W + (B a) e_r^T, with basis B (k x p).
class ColumnObjective {
 public:
  ColumnObjective(const Matrix& base_scores, Vector column, const std::vector<std::size_t>& labels,
                  const Vector& current, Matrix basis, const Regularizer& reg)
      : base_(base_scores), x_(std::move(column)), cache_(labels, base_scores.cols()), current_(current),
        basis_(std::move(basis)), reg_(reg) {}

  std::size_t dimension() const { return static_cast<std::size_t>(basis_.cols()); }

  double value(const Vector& a) const {
    return cache_.value(scores_of(a)) + reg_.column_value(current_ + basis_ * a);
  }

  double value_and_gradient(const Vector& a, Vector& g) const {
    const Vector delta = basis_ * a;
    Matrix residual;
    const double v = cache_.value_and_residual(a, scores_of(a), residual) + reg_.column_value(current_ + delta);
    Vector gc = residual.transpose() * x_ / static_cast<double>(x_.size());
    reg_.add_column_gradient(current_ + delta, gc);
    g = basis_.transpose() * gc;
    return v;
  }

  double value_difference(const Vector& a, const Vector& b) const {
    auto scores = [this](const Vector& p) { return scores_of(p); };
    return cache_.change(a, scores, scores_of(b)) + reg_.column_value(current_ + basis_ * b) -
           reg_.column_value(current_ + basis_ * a);
  }

 private:
  Matrix scores_of(const Vector& a) const { return base_ + x_ * (basis_ * a).transpose(); }

  const Matrix& base_;
  Vector x_;
  detail::SoftmaxCache cache_;
  Vector current_;
  Matrix basis_;
  const Regularizer& reg_;
};

struct CorrectiveResult {
  WeightMatrix weights;
  SolverResult solver;
};

/// argmin L(W) subject to W_{.,i} = 0 for i outside the support, warm-started at w_init.
inline CorrectiveResult corrective_solve(const Dataset& s, const std::vector<std::size_t>& support,
                                         const WeightMatrix& w_init, const Regularizer& reg, const SolverConfig& cfg) {
  detail::require(!s.empty(), "corrective_solve: dataset is empty");
  detail::require(w_init.k() == s.k() && w_init.d() == s.d(), "corrective_solve: weight shape mismatch");
  for (std::size_t j : w_init.support()) {
    if (std::find(support.begin(), support.end(), j) == support.end() &&
        (w_init.entries().col(static_cast<Index>(j)).array() != 0.0).any()) {
      throw InputError("corrective_solve: initial weights use column " + std::to_string(j) + " outside the support");
    }
  }
  CorrectiveResult out;
  out.weights = WeightMatrix(s.k(), s.d());
  for (std::size_t j : support) out.weights.add_to_support(j);
  if (support.empty()) {
    out.solver.converged = true;
    out.solver.value = loss_avg(out.weights, s, reg);
    return out;
  }
  RestrictedObjective obj(detail::gather_columns(s.features(), support), s.labels(), s.k(), reg);
  Matrix init(static_cast<Index>(s.k()), static_cast<Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c) init.col(static_cast<Index>(c)) = w_init.entries().col(static_cast<Index>(support[c]));
  out.solver = minimize_smooth(obj, Eigen::Map<const Vector>(init.data(), init.size()), cfg);
  out.weights.assign_restricted(obj.as_matrix(out.solver.point));
  return out;
}

struct Selection {
  std::size_t index = 0;   // feature index, or group id
  double score = 0.0;      // column score (group score sum for groups)
};

/// Greedy choice of the next column. Returns nullopt when every column score is <= early_stop_score.
inline std::optional<Selection> select_feature(const WeightMatrix& w, const Dataset& s, const TrainConfig& cfg,
                                               const Matrix* precomputed_gradient = nullptr) {
  const Matrix g = precomputed_gradient ? *precomputed_gradient : gradient(w, s, cfg.reg);
  const Vector sc = column_scores(g);
  if (sc.size() == 0 || sc.maxCoeff() <= cfg.early_stop_score) return std::nullopt;

  if (cfg.rule == SelectionRule::grad_l1) {
    Index best = 0;
    for (Index r = 1; r < sc.size(); ++r) {
      if (sc(r) > sc(best)) best = r;
    }
    return Selection{static_cast<std::size_t>(best), sc(best)};
  }

  const Matrix base = scores(w.entries(), s);
  const SolverConfig solver = cfg.corrective_solver();
  double best_loss = std::numeric_limits<double>::infinity();
  std::optional<Selection> best;
  for (Index r = 0; r < sc.size(); ++r) {
    if (sc(r) <= cfg.early_stop_score) continue;
    const std::size_t ru = static_cast<std::size_t>(r);
    double candidate = 0.0;
    if (cfg.rule == SelectionRule::best_column_refit) {
      std::vector<std::size_t> sup = w.support();
      if (!w.in_support(ru)) sup.push_back(ru);
      candidate = corrective_solve(s, sup, w, cfg.reg, solver).solver.value;
    } else {
      const Index k = static_cast<Index>(s.k());
      Matrix basis = cfg.rule == SelectionRule::single_column_vector ? Matrix(Matrix::Identity(k, k))
                                                                      : Matrix(g.col(r));
      ColumnObjective obj(base, s.features().col(r), s.labels(), w.entries().col(r), std::move(basis), cfg.reg);
      candidate = minimize_smooth(obj, Vector::Zero(static_cast<Index>(obj.dimension())), solver).value;
    }
    if (candidate < best_loss) {
      best_loss = candidate;
      best = Selection{ru, sc(r)};
    }
  }
  return best;
}

/// Sum of member column scores for every group.
inline Vector group_scores(const Vector& column_scores, const FeatureGroups& groups) {
  Vector out(static_cast<Index>(groups.size()));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    double acc = 0.0;
    for (std::size_t j : groups[gi]) acc += column_scores(static_cast<Index>(j));
    out(static_cast<Index>(gi)) = acc;
  }
  return out;
}

/// Group with the largest summed column score (lowest id on ties); nullopt when every
/// column score is <= early_stop_score.
inline std::optional<Selection> select_group(const Vector& column_scores, const FeatureGroups& groups,
                                             double early_stop_score = 1e-10) {
  if (groups.empty() || column_scores.size() == 0 || column_scores.maxCoeff() <= early_stop_score) return std::nullopt;
  const Vector gs = group_scores(column_scores, groups);
  Index best = 0;
  for (Index gi = 1; gi < gs.size(); ++gi) {
    if (gs(gi) > gs(best)) best = gi;
  }
  return Selection{static_cast<std::size_t>(best), gs(best)};
}

inline std::optional<Selection> select_group(const WeightMatrix& w, const Dataset& s, const FeatureGroups& groups,
                                             const Regularizer& reg = {}, double early_stop_score = 1e-10) {
  return select_group(column_scores(gradient(w, s, reg)), groups, early_stop_score);
}

namespace detail {

inline void fill_round_stats(RoundRecord& rec, const WeightMatrix& w, const Dataset& s, const Dataset* heldout,
                             const Regularizer& reg, const SolverResult& sr) {
  rec.train_loss = loss_avg(w, s, reg);
  rec.train_error = zero_one_error(w, s);
  if (heldout) rec.heldout_error = zero_one_error(w, *heldout);
  rec.support_size = w.support().size();
  rec.solver_converged = sr.converged;
  rec.solver_gradient_norm = sr.final_gradient_norm;
  rec.solver_iterations = sr.iterations;
  if (!sr.converged && sr.final_gradient_norm > 1e-4) {
    rec.warning = "corrective step stopped with gradient norm " + std::to_string(sr.final_gradient_norm);
  }
}

}  // namespace detail

/// ShareBoost: W = 0, I = {}; each round pick a column (or group), add it to I and
/// re-optimize every column in I.
inline TrainResult shareboost_train(const Dataset& s, const TrainConfig& cfg, const Dataset* heldout = nullptr) {
  detail::require(!s.empty(), "train: dataset is empty");
  cfg.validate(s.d());
  if (heldout) {
    detail::require(heldout->d() == s.d() && heldout->k() == s.k(), "train: held-out set shape differs from training set");
  }
  TrainResult out;
  out.weights = WeightMatrix(s.k(), s.d());
  out.trace.initial_loss = loss_avg(out.weights, s, cfg.reg);
  out.trace.initial_error = zero_one_error(out.weights, s);
  const SolverConfig solver = cfg.corrective_solver();

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const Matrix g = gradient(out.weights, s, cfg.reg);
    std::optional<Selection> pick;
    std::vector<std::size_t> candidates;
    if (cfg.groups) {
      pick = select_group(column_scores(g), *cfg.groups, cfg.early_stop_score);
      if (pick) candidates = (*cfg.groups)[pick->index];
    } else {
      pick = select_feature(out.weights, s, cfg, &g);
      if (pick) candidates = {pick->index};
    }
    if (!pick) {
      out.trace.stopped_early = true;
      break;
    }
    RoundRecord rec;
    rec.round = t;
    rec.selected = pick->index;
    rec.score = pick->score;
    for (std::size_t j : candidates) {
      if (out.weights.add_to_support(j)) rec.columns.push_back(j);
    }
    CorrectiveResult cr = corrective_solve(s, out.weights.support(), out.weights, cfg.reg, solver);
    out.weights = std::move(cr.weights);
    detail::fill_round_stats(rec, out.weights, s, heldout, cfg.reg, cr.solver);
    out.trace.rounds.push_back(std::move(rec));
    if (cfg.on_round && !cfg.on_round(out.trace.rounds.back())) break;
  }
  return out;
}

struct ProgressRound {
  std::size_t round = 0;       // t+1: the round whose progress is checked
  double gap_before = 0.0;     // eps_t
  double gap_after = 0.0;      // eps_{t+1}
  double bound = 0.0;          // eps_t^2 / (4 ||W*||_{inf,1}^2)
  double sharp_bound = 0.0;    // eps_t^2 / (4 (sum_{i in supp(W*) - F} ||W*_i||_inf)^2)
  bool exempt = false;         // eps_t <= 0
  bool violated = false;
  bool sharp_violated = false;
};

struct ProgressReport {
  double reference_loss = 0.0;
  std::vector<ProgressRound> rounds;
  std::size_t violations = 0;
  std::size_t sharp_violations = 0;
};

/// Checks eps_t - eps_{t+1} >= eps_t^2 / (4 ||W*||_{inf,1}^2) - slack for every round of a trace,
/// where eps_t = L(W^(t)) - L(W*). Rounds with eps_t <= 0 are exempt.
inline ProgressReport progress_check(const TrainTrace& trace, const Matrix& w_star, const Dataset& s,
                                     const Regularizer& reg, double slack) {
  ProgressReport rep;
  rep.reference_loss = loss_avg(w_star, s, reg);
  const double norm = mixed_norm(w_star, NormTag::inf, NormTag::one);
  std::vector<char> selected(s.d(), 0);
  double before = trace.initial_loss - rep.reference_loss;
  for (const RoundRecord& rec : trace.rounds) {
    ProgressRound pr;
    pr.round = rec.round;
    pr.gap_before = before;
    pr.gap_after = rec.train_loss - rep.reference_loss;
    double outside = 0.0;
    for (Index j = 0; j < w_star.cols(); ++j) {
      if (!selected[static_cast<std::size_t>(j)]) outside += w_star.col(j).cwiseAbs().maxCoeff();
    }
    if (before <= 0.0) {
      pr.exempt = true;
    } else {
      const double decrease = pr.gap_before - pr.gap_after;
      pr.bound = norm > 0.0 ? before * before / (4.0 * norm * norm) : std::numeric_limits<double>::infinity();
      pr.sharp_bound = outside > 0.0 ? before * before / (4.0 * outside * outside) : 0.0;
      pr.violated = decrease < pr.bound - slack;
      pr.sharp_violated = decrease < pr.sharp_bound - slack;
      rep.violations += pr.violated ? 1 : 0;
      rep.sharp_violations += pr.sharp_violated ? 1 : 0;
    }
    for (std::size_t j : rec.columns) selected[j] = 1;
    before = pr.gap_after;
    rep.rounds.push_back(pr);
  }
  return rep;
}

}  // namespace shareboost
