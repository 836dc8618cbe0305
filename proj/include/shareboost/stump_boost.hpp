#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "shareboost/feature_maps.hpp"
#include "shareboost/model.hpp"
#include "shareboost/trainer.hpp"

namespace shareboost {

struct StumpTrainResult {
  FeatureMapDescriptor map;  // the selected stumps, in selection order
  WeightMatrix weights;      // k x (number of distinct stumps)
  TrainTrace trace;          // selected = index into map.stumps
};

/// ShareBoost over the implicit space of every stump 1[v_i <= theta]. The stump columns are
/// never materialized: each round scans all thresholds for the best score, appends that stump
/// as a new column and re-optimizes all selected stumps.
inline StumpTrainResult stump_boost_train(const Dataset& raw, const TrainConfig& cfg, const Dataset* heldout = nullptr,
                                          std::size_t threads = 1) {
  detail::require(!raw.empty(), "train: dataset is empty");
  detail::require(!cfg.groups, "train: groups are not supported with stump features");
  detail::require(cfg.rule == SelectionRule::grad_l1, "train: stump features use the gradient selection rule");
  cfg.validate(raw.d());
  if (heldout) detail::require(heldout->d() == raw.d(), "train: held-out set shape differs from training set");

  StumpTrainResult out;
  out.map = FeatureMapDescriptor::from_stumps(raw.d(), {});
  const Index m = static_cast<Index>(raw.m());
  const Index k = static_cast<Index>(raw.k());
  Matrix design(m, 0);
  Matrix w(k, 0);
  const SolverConfig solver = cfg.corrective_solver();
  {
    const Dataset empty(Matrix(m, 0), raw.labels(), raw.k());
    out.trace.initial_loss = loss_avg(Matrix(k, 0), empty, cfg.reg);
    out.trace.initial_error = zero_one_error(Matrix(k, 0), empty);
  }

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const Matrix current = design * w.transpose();
    const StumpChoice pick = best_stump(raw, current, threads);
    if (pick.score <= cfg.early_stop_score) {
      out.trace.stopped_early = true;
      break;
    }
    RoundRecord rec;
    rec.round = t;
    rec.score = pick.score;
    std::size_t idx = 0;
    while (idx < out.map.stumps.size() && !(out.map.stumps[idx] == pick.stump)) ++idx;
    rec.selected = idx;
    if (idx == out.map.stumps.size()) {
      out.map.stumps.push_back(pick.stump);
      rec.columns.push_back(idx);
      design.conservativeResize(Eigen::NoChange, design.cols() + 1);
      for (Index i = 0; i < m; ++i) design(i, design.cols() - 1) = pick.stump(raw.features().row(i).transpose());
      w.conservativeResize(Eigen::NoChange, w.cols() + 1);
      w.col(w.cols() - 1).setZero();
    }
    const Dataset mapped(design, raw.labels(), raw.k());
    std::vector<std::size_t> support(static_cast<std::size_t>(design.cols()));
    std::iota(support.begin(), support.end(), std::size_t{0});
    WeightMatrix init = WeightMatrix::from_dense(w);
    CorrectiveResult cr = corrective_solve(mapped, support, init, cfg.reg, solver);
    w = cr.weights.entries();
    const Dataset* mapped_heldout = nullptr;
    Dataset ho;
    if (heldout) {
      ho = apply_map(out.map, *heldout);
      mapped_heldout = &ho;
    }
    detail::fill_round_stats(rec, cr.weights, mapped, mapped_heldout, cfg.reg, cr.solver);
    out.trace.rounds.push_back(std::move(rec));
    if (cfg.on_round && !cfg.on_round(out.trace.rounds.back())) break;
  }
  out.weights = WeightMatrix(raw.k(), out.map.stumps.size());
  for (Index j = 0; j < w.cols(); ++j) out.weights.add_to_support(static_cast<std::size_t>(j));
  out.weights.assign_restricted(w);
  return out;
}

}  // namespace shareboost
