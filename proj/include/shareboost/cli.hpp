#pragma once

#include <cstdint>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "shareboost/feature_maps.hpp"
#include "shareboost/io.hpp"
#include "shareboost/model.hpp"
#include "shareboost/stump_boost.hpp"
#include "shareboost/synthetic.hpp"
#include "shareboost/trainer.hpp"

namespace shareboost {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_numerical = 3 };

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::size_t instances = 0;
};

/// Analytic gradient against central differences (step h) on random small instances.
/// Relative error is ||a - b||_F / max(||a||_F, ||b||_F).
inline GradcheckResult gradcheck(std::size_t instances, std::uint64_t seed, double h = 1e-5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> md(1, 20), dd(1, 8), kd(2, 5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GradcheckResult res;
  res.instances = instances;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t m = md(rng), d = dd(rng), k = kd(rng);
    Matrix x(static_cast<Index>(m), static_cast<Index>(d));
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    std::vector<std::size_t> y(m);
    for (auto& v : y) v = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
    const Dataset s(std::move(x), std::move(y), k);
    Matrix w(static_cast<Index>(k), static_cast<Index>(d));
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    const Matrix g = gradient(w, s);
    Matrix fd(w.rows(), w.cols());
    for (Index i = 0; i < w.size(); ++i) {
      Matrix a = w, b = w;
      a.data()[i] += h;
      b.data()[i] -= h;
      fd.data()[i] = (loss_avg(a, s) - loss_avg(b, s)) / (2.0 * h);
    }
    const double scale = std::max(g.norm(), fd.norm());
    const double rel = scale > 0.0 ? (g - fd).norm() / scale : 0.0;
    res.max_relative_error = std::max(res.max_relative_error, rel);
  }
  return res;
}

namespace detail {

struct DataArgs {
  std::string path;
  std::string format = "csv";
  std::string label_col;

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--data", path, "dataset file");
    if (required) o->required();
    app->add_option("--format", format, "csv or sparse")->check(CLI::IsMember({"csv", "sparse"}));
    app->add_option("--label-col", label_col, "csv label column: header name or 0-based index (default: last)");
  }

  LoadOptions options() const {
    LoadOptions o;
    o.format = parse_dataset_format(format);
    o.label_column = label_col;
    return o;
  }

  std::size_t label_base() const { return format == "sparse" ? 1 : 0; }
};

/// Same rows with the class count widened to k.
inline Dataset with_classes(const Dataset& s, std::size_t k, const std::string& what) {
  require(s.k() <= k, what + " has labels beyond the " + std::to_string(k) + " training classes");
  return Dataset(s.features(), s.labels(), k);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& t : split(s, ',')) {
    const auto v = parse_double(t);
    if (!v) throw InputError("bad number '" + t + "' in list '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

/// Command-line entry point. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"ShareBoost: sparse multiclass linear predictors with shared features"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // train
  auto* train = app.add_subcommand("train", "train a model");
  detail::DataArgs train_data;
  train_data.add(train);
  std::size_t rounds = 10, anchors = 30, threads = 0;
  std::string rule = "grad", reg = "none", features = "identity", quantiles = "0.3,0.5,0.8";
  double lambda = 0.0, beta = 100.0;
  std::uint64_t seed = 0;
  bool no_scale = false;
  std::string heldout, model_out, trace_out;
  train->add_option("--rounds,-T", rounds, "number of rounds T")->check(CLI::PositiveNumber);
  train->add_option("--rule", rule, "selection rule")->check(CLI::IsMember({"grad", "refit", "linesearch", "vector"}));
  train->add_option("--reg", reg, "regularizer")->check(CLI::IsMember({"none", "frob", "sminf1"}));
  train->add_option("--lambda", lambda, "regularization weight");
  train->add_option("--beta", beta, "smoothing of the mixed norm");
  train->add_option("--features", features, "feature map")
      ->check(CLI::IsMember({"identity", "stumps", "quadratic", "anchors"}));
  train->add_option("--anchors", anchors, "number of anchor centers")->check(CLI::PositiveNumber);
  train->add_option("--quantiles", quantiles, "comma-separated radius quantiles");
  train->add_option("--seed", seed, "random seed");
  train->add_option("--threads", threads, "worker threads (0: all cores)");
  train->add_flag("--no-scale", no_scale, "do not rescale features to [-1,1]");
  train->add_option("--heldout", heldout, "held-out dataset, same format");
  train->add_option("--out", model_out, "model file")->required();
  train->add_option("--trace", trace_out, "trace file");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict labels");
  detail::DataArgs predict_data;
  predict_data.add(predict_cmd);
  std::string model_in, labels_out;
  predict_cmd->add_option("--model", model_in, "model file")->required();
  predict_cmd->add_option("--out", labels_out, "label file (default: stdout)");

  // eval
  auto* eval = app.add_subcommand("eval", "loss, 0-1 error and support size of a model");
  detail::DataArgs eval_data;
  eval_data.add(eval);
  eval->add_option("--model", model_in, "model file")->required();

  // path
  auto* path = app.add_subcommand("path", "sparsity / accuracy table from a trace");
  std::string trace_in;
  path->add_option("--trace", trace_in, "trace file")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string kind = "code", synth_out;
  std::size_t sk = 16, sm = 1600, ss = 6;
  double eps = 0.25, noise = 0.0, radius = 1.0, sigma = 0.4;
  synth->add_option("--kind", kind, "code, block or blobs")->check(CLI::IsMember({"code", "block", "blobs"}));
  synth->add_option("--k", sk, "classes");
  synth->add_option("--m", sm, "examples");
  synth->add_option("--s", ss, "blocks (block)");
  synth->add_option("--epsilon", eps, "fraction of examples with a zeroed block (block)");
  synth->add_option("--noise", noise, "label noise rate (code)");
  synth->add_option("--radius", radius, "center radius (blobs)");
  synth->add_option("--sigma", sigma, "standard deviation (blobs)");
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--out", synth_out, "output csv file")->required();

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "compare analytic and numerical gradients");
  std::size_t instances = 50;
  gc->add_option("--instances", instances, "random instances")->check(CLI::PositiveNumber);
  gc->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (train->parsed()) {
      const Dataset raw = load_dataset(train_data.path, train_data.options());
      auto [scaled, scaling] = scale_features(raw, no_scale);
      TrainConfig cfg;
      cfg.rounds = rounds;
      cfg.rule = parse_selection_rule(rule);
      cfg.reg.kind = parse_regularizer_kind(reg);
      cfg.reg.lambda = lambda;
      cfg.reg.beta = beta;
      std::optional<Dataset> ho_raw;
      if (!heldout.empty()) {
        ho_raw = detail::with_classes(scaling.apply(load_dataset(heldout, train_data.options())), raw.k(), "held-out set");
      }
      WeightModel model;
      model.scaling = scaling;
      TrainTrace trace;
      if (features == "stumps") {
        StumpTrainResult r = stump_boost_train(scaled, cfg, ho_raw ? &*ho_raw : nullptr, threads);
        model.map = std::move(r.map);
        model.weights = std::move(r.weights);
        trace = std::move(r.trace);
      } else {
        if (features == "quadratic") {
          model.map = FeatureMapDescriptor::quadratic(raw.d());
        } else if (features == "anchors") {
          std::vector<std::string> warnings;
          model.map = build_anchor_map(scaled, anchors, detail::parse_list(quantiles), seed, &warnings);
          for (const auto& w : warnings) err << "warning: " << w << '\n';
          cfg.groups = model.map.groups();
        } else {
          model.map = FeatureMapDescriptor::identity(raw.d());
        }
        const Dataset mapped = apply_map(model.map, scaled);
        std::optional<Dataset> ho;
        if (ho_raw) ho = apply_map(model.map, *ho_raw);
        TrainResult r = shareboost_train(mapped, cfg, ho ? &*ho : nullptr);
        model.weights = std::move(r.weights);
        trace = std::move(r.trace);
      }
      for (const auto& rec : trace.rounds) {
        if (!rec.warning.empty()) err << "warning: round " << rec.round << ": " << rec.warning << '\n';
      }
      save_model(model_out, model);
      if (!trace_out.empty()) save_trace(trace_out, trace);
      out << "rounds " << trace.rounds.size() << (trace.stopped_early ? " (stopped early)" : "") << '\n';
      if (!trace.rounds.empty()) {
        out << "train_loss " << detail::format_double(trace.rounds.back().train_loss) << '\n';
        out << "train_error " << detail::format_double(trace.rounds.back().train_error) << '\n';
      }
      out << "support " << model.weights.support().size() << '\n';
      return exit_ok;
    }

    if (predict_cmd->parsed()) {
      const WeightModel model = load_model(model_in);
      const Dataset s = load_dataset(predict_data.path, predict_data.options());
      detail::require(s.d() == model.raw_dimension(), "dataset has d=" + std::to_string(s.d()) + ", model expects d=" +
                                                  std::to_string(model.raw_dimension()));
      const std::vector<std::size_t> labels = model.predict_rows(s.features());
      std::ostringstream buf;
      for (std::size_t y : labels) buf << (y + predict_data.label_base()) << '\n';
      if (labels_out.empty()) {
        out << buf.str();
      } else {
        std::ofstream f = detail::open_out(labels_out);
        f << buf.str();
      }
      return exit_ok;
    }

    if (eval->parsed()) {
      const WeightModel model = load_model(model_in);
      const Dataset raw = load_dataset(eval_data.path, eval_data.options());
      detail::require(raw.d() == model.raw_dimension(), "dataset has d=" + std::to_string(raw.d()) + ", model expects d=" +
                                                    std::to_string(model.raw_dimension()));
      const Dataset s = model.features(detail::with_classes(raw, model.k(), "dataset"));
      out << "loss " << detail::format_double(loss_avg(model.weights, s)) << '\n';
      out << "error " << detail::format_double(zero_one_error(model.weights, s)) << '\n';
      out << "support " << model.weights.support().size() << '\n';
      return exit_ok;
    }

    if (path->parsed()) {
      write_path_table(out, load_trace(trace_in));
      return exit_ok;
    }

    if (synth->parsed()) {
      Dataset s;
      if (kind == "code") {
        CodeDatasetSpec spec;
        spec.k = sk;
        spec.m = sm;
        s = gen_code_dataset(spec, noise, seed);
      } else if (kind == "block") {
        BlockDatasetSpec spec;
        spec.k = sk;
        spec.m = sm;
        spec.s = ss;
        spec.epsilon = eps;
        std::vector<std::string> warnings;
        s = gen_block_dataset(spec, seed, &warnings);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
      } else {
        s = gen_blobs(sk, sm, radius, sigma, seed);
      }
      save_dataset_csv(synth_out, s);
      return exit_ok;
    }

    if (gc->parsed()) {
      const GradcheckResult r = gradcheck(instances, seed);
      out << "max_relative_error " << detail::format_double(r.max_relative_error) << '\n';
      return r.max_relative_error <= 1e-6 ? exit_ok : exit_numerical;
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return exit_data;
  }
  return exit_usage;
}

}  // namespace shareboost
