#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "shareboost/dataset.hpp"
#include "shareboost/feature_maps.hpp"
#include "shareboost/model.hpp"
#include "shareboost/trainer.hpp"

namespace shareboost {

enum class DatasetFormat { csv, sparse };

inline DatasetFormat parse_dataset_format(const std::string& s) {
  if (s == "csv") return DatasetFormat::csv;
  if (s == "sparse") return DatasetFormat::sparse;
  throw InputError("unknown dataset format '" + s + "'");
}

struct LoadOptions {
  DatasetFormat format = DatasetFormat::csv;
  // csv: label column by header name or 0-based index; empty means the last column
  std::string label_column;
  // first class index used in the file: csv defaults to 0, sparse to 1
  std::optional<std::size_t> label_base;
  std::optional<std::size_t> num_classes;  // default: max label + 1
  std::optional<std::size_t> dimension;    // sparse: declared d (default: max index seen)
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::optional<long long> parse_integer(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline std::string at_line(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline std::size_t to_label(const std::string& tok, std::size_t base, const std::string& where) {
  const auto v = parse_integer(tok);
  if (!v) throw InputError(where + "unknown label token '" + tok + "'");
  if (*v < static_cast<long long>(base)) {
    throw InputError(where + "label " + tok + " is below the label base " + std::to_string(base));
  }
  return static_cast<std::size_t>(*v - static_cast<long long>(base));
}

inline Dataset finish_dataset(Matrix x, std::vector<std::size_t> y, const LoadOptions& opt, const std::string& path) {
  if (y.empty()) throw InputError(path + ": no examples");
  std::size_t k = 0;
  for (std::size_t v : y) k = std::max(k, v + 1);
  if (opt.num_classes) {
    if (*opt.num_classes < k) {
      throw InputError(path + ": label " + std::to_string(k - 1) + " is not below the declared class count " +
                       std::to_string(*opt.num_classes));
    }
    k = *opt.num_classes;
  }
  return Dataset(std::move(x), std::move(y), k);
}

inline Dataset load_csv(std::istream& in, const LoadOptions& opt, const std::string& path) {
  const std::size_t base = opt.label_base.value_or(0);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  std::optional<std::size_t> label_idx;
  std::size_t width = 0;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f = split(line, ',');
    if (width == 0) {
      width = f.size();
      // header iff no field is numeric, so a bad first data row still reports its line
      bool any_numeric = false;
      for (const auto& t : f) any_numeric = any_numeric || parse_double(t).has_value();
      if (!any_numeric) header = f;
      if (opt.label_column.empty()) {
        label_idx = width - 1;
      } else if (auto i = parse_integer(opt.label_column)) {
        if (*i < 0 || static_cast<std::size_t>(*i) >= width) {
          throw InputError(at_line(path, lineno) + "label column " + opt.label_column + " out of range");
        }
        label_idx = static_cast<std::size_t>(*i);
      } else {
        for (std::size_t j = 0; j < header.size(); ++j) {
          if (header[j] == opt.label_column) label_idx = j;
        }
        if (!label_idx) throw InputError(at_line(path, lineno) + "no column named '" + opt.label_column + "'");
      }
      if (!header.empty()) continue;
    }
    if (f.size() != width) {
      throw InputError(at_line(path, lineno) + "expected " + std::to_string(width) + " fields, found " +
                       std::to_string(f.size()));
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == *label_idx) continue;
      const auto v = parse_double(f[j]);
      if (!v || !std::isfinite(*v)) throw InputError(at_line(path, lineno) + "bad number '" + f[j] + "'");
      row.push_back(*v);
    }
    labels.push_back(to_label(f[*label_idx], base, at_line(path, lineno)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no examples");
  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return finish_dataset(std::move(x), std::move(labels), opt, path);
}

inline Dataset load_sparse(std::istream& in, const LoadOptions& opt, const std::string& path) {
  const std::size_t base = opt.label_base.value_or(1);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<std::size_t> labels;
  std::size_t d = opt.dimension.value_or(0);
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    labels.push_back(to_label(tok, base, at_line(path, lineno)));
    std::vector<std::pair<std::size_t, double>> row;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw InputError(at_line(path, lineno) + "expected index:value, found '" + tok + "'");
      const auto idx = parse_integer(tok.substr(0, colon));
      const auto val = parse_double(tok.substr(colon + 1));
      if (!idx || *idx < 1) throw InputError(at_line(path, lineno) + "bad feature index in '" + tok + "'");
      if (!val || !std::isfinite(*val)) throw InputError(at_line(path, lineno) + "bad value in '" + tok + "'");
      const auto j = static_cast<std::size_t>(*idx);
      if (opt.dimension && j > *opt.dimension) {
        throw InputError(at_line(path, lineno) + "index " + std::to_string(j) + " exceeds declared dimension " +
                         std::to_string(*opt.dimension));
      }
      d = std::max(d, j);
      row.emplace_back(j - 1, *val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no examples");
  Matrix x = Matrix::Zero(static_cast<Index>(rows.size()), static_cast<Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : rows[i]) x(static_cast<Index>(i), static_cast<Index>(j)) = v;
  }
  return finish_dataset(std::move(x), std::move(labels), opt, path);
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  return out;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace detail

inline Dataset load_dataset(std::istream& in, const LoadOptions& opt, const std::string& name = "<stream>") {
  return opt.format == DatasetFormat::csv ? detail::load_csv(in, opt, name) : detail::load_sparse(in, opt, name);
}

inline Dataset load_dataset(const std::string& path, const LoadOptions& opt = {}) {
  std::ifstream in = detail::open_in(path);
  return load_dataset(in, opt, path);
}

/// Comma-separated with header f1..fd,label and 0-based labels.
inline void save_dataset_csv(std::ostream& out, const Dataset& s) {
  for (std::size_t j = 0; j < s.d(); ++j) out << 'f' << (j + 1) << ',';
  out << "label\n";
  for (std::size_t i = 0; i < s.m(); ++i) {
    for (std::size_t j = 0; j < s.d(); ++j) out << detail::format_double(s.features()(static_cast<Index>(i), static_cast<Index>(j))) << ',';
    out << s.label(i) << '\n';
  }
}

inline void save_dataset_csv(const std::string& path, const Dataset& s) {
  std::ofstream out = detail::open_out(path);
  save_dataset_csv(out, s);
}

// ---------------------------------------------------------------------------
// Model file

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline json rows_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(m.row(i).transpose()));
  return out;
}

inline Matrix rows_from_json(const json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector r = vector_from_json(j[i]);
    require(r.size() == cols, "model file: ragged matrix");
    m.row(static_cast<Index>(i)) = r.transpose();
  }
  return m;
}

inline json map_to_json(const FeatureMapDescriptor& d) {
  json j{{"kind", to_string(d.kind)}, {"raw_dimension", d.raw_dimension}};
  if (d.kind == MapKind::stumps) {
    json st = json::array();
    for (const Stump& s : d.stumps) st.push_back({{"feature", s.raw_feature}, {"threshold", s.threshold}});
    j["stumps"] = st;
  } else if (d.kind == MapKind::anchors) {
    j["centers"] = rows_to_json(d.anchors.centers);
    j["radii"] = to_json(d.anchors.radii);
  }
  return j;
}

inline FeatureMapDescriptor map_from_json(const json& j) {
  const MapKind kind = parse_map_kind(j.at("kind").get<std::string>());
  const auto p = j.at("raw_dimension").get<std::size_t>();
  switch (kind) {
    case MapKind::identity: return FeatureMapDescriptor::identity(p);
    case MapKind::quadratic: return FeatureMapDescriptor::quadratic(p);
    case MapKind::stumps: {
      std::vector<Stump> list;
      for (const auto& s : j.at("stumps")) list.push_back({s.at("feature").get<std::size_t>(), s.at("threshold").get<double>()});
      return FeatureMapDescriptor::from_stumps(p, std::move(list));
    }
    case MapKind::anchors: {
      AnchorSet set;
      set.centers = rows_from_json(j.at("centers"), static_cast<Index>(p));
      set.radii = vector_from_json(j.at("radii"));
      return FeatureMapDescriptor::from_anchors(std::move(set));
    }
  }
  throw InputError("model file: bad feature map");
}

}  // namespace detail

inline std::string model_to_string(const WeightModel& model) {
  using detail::json;
  model.validate();
  json j;
  j["format_version"] = kModelFormatVersion;
  j["k"] = model.k();
  j["d"] = model.weights.d();
  j["support"] = model.weights.support();
  j["weights"] = detail::rows_to_json(model.weights.restricted());
  j["feature_map"] = detail::map_to_json(model.map);
  j["scaling"] = {{"shift", detail::to_json(model.scaling.shift)}, {"scale", detail::to_json(model.scaling.scale)}};
  return j.dump(1) + "\n";
}

inline WeightModel model_from_string(const std::string& text, const std::string& name = "<model>") {
  using detail::json;
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    detail::require(version == kModelFormatVersion, "unsupported model format version " + std::to_string(version));
    WeightModel m;
    const auto k = j.at("k").get<std::size_t>();
    const auto d = j.at("d").get<std::size_t>();
    const auto support = j.at("support").get<std::vector<std::size_t>>();
    m.weights = WeightMatrix(k, d);
    for (std::size_t c : support) {
      detail::require(m.weights.add_to_support(c), "duplicate support index " + std::to_string(c));
    }
    const json& w = j.at("weights");
    detail::require(w.size() == k, "weight block must have k rows");
    m.weights.assign_restricted(detail::rows_from_json(w, static_cast<Index>(support.size())));
    m.map = detail::map_from_json(j.at("feature_map"));
    m.scaling.shift = detail::vector_from_json(j.at("scaling").at("shift"));
    m.scaling.scale = detail::vector_from_json(j.at("scaling").at("scale"));
    detail::require(m.scaling.shift.size() == m.scaling.scale.size(), "scaling vectors differ in length");
    m.validate();
    return m;
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError(name + ": malformed model file: " + e.what());
  }
}

inline void save_model(const std::string& path, const WeightModel& model) {
  std::ofstream out = detail::open_out(path);
  out << model_to_string(model);
}

inline WeightModel load_model(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Trace file: whitespace-separated table, one row per executed round.

inline constexpr const char* kTraceHeader = "round\tselected_index\tscore\ttrain_loss\ttrain_err\theldout_err\tsupport_size";

inline void write_trace(std::ostream& out, const TrainTrace& trace) {
  using detail::format_double;
  out << kTraceHeader << '\n';
  for (const RoundRecord& r : trace.rounds) {
    out << r.round << '\t' << r.selected << '\t' << format_double(r.score) << '\t' << format_double(r.train_loss)
        << '\t' << format_double(r.train_error) << '\t' << format_double(r.heldout_error) << '\t' << r.support_size
        << '\n';
  }
}

inline void save_trace(const std::string& path, const TrainTrace& trace) {
  std::ofstream out = detail::open_out(path);
  write_trace(out, trace);
}

inline std::vector<RoundRecord> read_trace(std::istream& in, const std::string& name = "<trace>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<RoundRecord> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    std::string tok;
    while (ls >> tok) f.push_back(tok);
    if (f.front() == "round") continue;
    if (f.size() != 7) throw InputError(detail::at_line(name, lineno) + "expected 7 fields");
    auto num = [&](const std::string& s) {
      const auto v = detail::parse_double(s);
      if (!v) throw InputError(detail::at_line(name, lineno) + "bad number '" + s + "'");
      return *v;
    };
    auto idx = [&](const std::string& s) {
      const auto v = detail::parse_integer(s);
      if (!v || *v < 0) throw InputError(detail::at_line(name, lineno) + "bad index '" + s + "'");
      return static_cast<std::size_t>(*v);
    };
    RoundRecord r;
    r.round = idx(f[0]);
    r.selected = idx(f[1]);
    r.score = num(f[2]);
    r.train_loss = num(f[3]);
    r.train_error = num(f[4]);
    r.heldout_error = num(f[5]);
    r.support_size = idx(f[6]);
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<RoundRecord> load_trace(const std::string& path) {
  std::ifstream in = detail::open_in(path);
  return read_trace(in, path);
}

/// Sparsity / accuracy table read off a single training trace.
inline void write_path_table(std::ostream& out, const std::vector<RoundRecord>& rows) {
  using detail::format_double;
  out << "features\ttrain_loss\ttrain_err\theldout_err\n";
  for (const RoundRecord& r : rows) {
    out << r.support_size << '\t' << format_double(r.train_loss) << '\t' << format_double(r.train_error) << '\t'
        << format_double(r.heldout_error) << '\n';
  }
}

}  // namespace shareboost
