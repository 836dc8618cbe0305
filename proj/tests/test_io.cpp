#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shareboost/io.hpp"
#include "shareboost/model.hpp"

namespace sb = shareboost;
using sb::Dataset;
using sb::Index;
using sb::Matrix;
using sb::Vector;

namespace {

Dataset parse(const std::string& text, sb::LoadOptions opt = {}) {
  std::istringstream in(text);
  return sb::load_dataset(in, opt, "mem");
}

sb::LoadOptions sparse() {
  sb::LoadOptions o;
  o.format = sb::DatasetFormat::sparse;
  return o;
}

std::string error_of(const std::string& text, sb::LoadOptions opt = {}) {
  try {
    parse(text, opt);
  } catch (const sb::InputError& e) {
    return e.what();
  }
  return "";
}

// Model with random weights on a subset of columns and a non-trivial scaling.
sb::WeightModel random_model(std::mt19937_64& rng, sb::FeatureMapDescriptor map, std::size_t k) {
  const std::size_t p = map.raw_dimension;
  sb::WeightModel model;
  Matrix w = oracle::random_matrix(rng, static_cast<Index>(k), static_cast<Index>(map.output_dimension()), 3.0);
  for (Index j = 0; j < w.cols(); j += 3) w.col(j).setZero();
  model.weights = sb::WeightMatrix::from_dense(w);
  model.map = std::move(map);
  model.scaling.shift = oracle::random_matrix(rng, static_cast<Index>(p), 1);
  model.scaling.scale = oracle::random_matrix(rng, static_cast<Index>(p), 1).cwiseAbs();
  return model;
}

std::vector<sb::FeatureMapDescriptor> every_map_kind(std::mt19937_64& rng) {
  const std::size_t p = 3;
  sb::AnchorSet set;
  set.centers = oracle::random_matrix(rng, 4, static_cast<Index>(p));
  set.radii = Vector::Constant(4, 0.9);
  return {sb::FeatureMapDescriptor::identity(p), sb::FeatureMapDescriptor::quadratic(p),
          sb::FeatureMapDescriptor::from_stumps(p, {{0, 0.1}, {2, -0.3}, {1, 1.0 / 3.0}, {0, -0.7}}),
          sb::FeatureMapDescriptor::from_anchors(set)};
}

}  // namespace

TEST(LoadCsv, HeaderAndRows) {
  const Dataset s = parse("f1,f2,label\n0.5,1,0\n-2,3e-1,2\n4,5,1\n");
  EXPECT_EQ(s.m(), 3u);
  EXPECT_EQ(s.d(), 2u);
  EXPECT_EQ(s.k(), 3u);
  EXPECT_EQ(s.labels(), (std::vector<std::size_t>{0, 2, 1}));
  EXPECT_EQ(s.features()(1, 1), 0.3);
  EXPECT_FALSE(s.bounded());
}

TEST(LoadCsv, WithoutHeader) {
  const Dataset s = parse("0.5,1,0\n-0.5,0,1\n");
  EXPECT_EQ(s.m(), 2u);
  EXPECT_TRUE(s.bounded());
}

TEST(LoadCsv, LabelColumnByNameOrIndex) {
  sb::LoadOptions opt;
  opt.label_column = "y";
  const Dataset a = parse("y,a,b\n1,0.1,0.2\n0,0.3,0.4\n", opt);
  EXPECT_EQ(a.labels(), (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(a.features()(0, 1), 0.2);
  opt.label_column = "0";
  const Dataset b = parse("1,0.1,0.2\n0,0.3,0.4\n", opt);
  EXPECT_EQ(b.features(), a.features());
  opt.label_column = "z";
  EXPECT_NE(error_of("y,a\n1,2\n", opt).find("no column named"), std::string::npos);
}

TEST(LoadCsv, MalformedRowReportsLine) {
  const std::string msg = error_of("f1,f2,label\n1,2,0\n3,0\n");
  EXPECT_NE(msg.find("mem:3:"), std::string::npos) << msg;
  EXPECT_NE(error_of("1,abc,0\n").find("mem:1:"), std::string::npos);
}

TEST(LoadCsv, UnknownLabelToken) {
  EXPECT_NE(error_of("1,2,cat\n").find("unknown label token"), std::string::npos);
  EXPECT_NE(error_of("1,2,-1\n").find("below the label base"), std::string::npos);
}

TEST(LoadCsv, EmptyInputIsAnError) {
  EXPECT_THROW(parse(""), sb::InputError);
  EXPECT_THROW(parse("f1,label\n"), sb::InputError);
  EXPECT_THROW(parse("", sparse()), sb::InputError);
}

TEST(LoadCsv, DeclaredClassCount) {
  sb::LoadOptions opt;
  opt.num_classes = 5;
  EXPECT_EQ(parse("1,0\n2,1\n", opt).k(), 5u);
  opt.num_classes = 1;
  EXPECT_THROW(parse("1,0\n2,1\n", opt), sb::InputError);
}

TEST(LoadSparse, IndexValueLine) {
  const Dataset s = parse("3 1:0.5 7:-1\n1 2:0.25  # comment\n\n", sparse());
  EXPECT_EQ(s.m(), 2u);
  EXPECT_EQ(s.label(0), 2u);
  EXPECT_GE(s.d(), 7u);
  EXPECT_EQ(s.features()(0, 6), -1.0);
  EXPECT_EQ(s.features()(0, 0), 0.5);
  EXPECT_EQ(s.features()(1, 1), 0.25);
  EXPECT_EQ(s.features()(1, 6), 0.0);
}

TEST(LoadSparse, DeclaredDimensionAndErrors) {
  auto opt = sparse();
  opt.dimension = 10;
  EXPECT_EQ(parse("1 2:1\n", opt).d(), 10u);
  opt.dimension = 3;
  EXPECT_NE(error_of("1 2:1\n2 5:1\n", opt).find("mem:2:"), std::string::npos);
  EXPECT_THROW(parse("1 0:1\n", sparse()), sb::InputError);
  EXPECT_THROW(parse("1 2-1\n", sparse()), sb::InputError);
  EXPECT_THROW(parse("0 1:1\n", sparse()), sb::InputError);
}

TEST(SaveCsv, RoundTrip) {
  std::mt19937_64 rng(4);
  const Dataset s = oracle::random_dataset(rng, 20, 3, 4, 7.0);
  std::stringstream buf;
  sb::save_dataset_csv(buf, s);
  const Dataset back = sb::load_dataset(buf, {}, "mem");
  EXPECT_EQ(back.features(), s.features());
  EXPECT_EQ(back.labels(), s.labels());
}

TEST(Scaling, MidpointAndRange) {
  Matrix x(3, 2);
  x << 0, 1, 10, 1, 5, 1;
  const auto [scaled, t] = sb::scale_features(Dataset(x, {0, 1, 0}, 2));
  EXPECT_EQ(scaled.features()(2, 0), 0.0);
  EXPECT_EQ(scaled.features()(0, 0), -1.0);
  EXPECT_EQ(scaled.features()(1, 0), 1.0);
  // constant feature
  EXPECT_EQ(t.scale(1), 0.0);
  EXPECT_TRUE(scaled.features().col(1).isZero(0.0));
  EXPECT_TRUE(scaled.bounded());
}

TEST(Scaling, IdentityOptionHonored) {
  std::mt19937_64 rng(2);
  const Dataset s = oracle::random_dataset(rng, 10, 3, 2);
  const auto [same, t] = sb::scale_features(s, true);
  EXPECT_TRUE(t.is_identity());
  EXPECT_EQ(same.features(), s.features());
}

TEST(Scaling, AlwaysInUnitBox) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset s = oracle::random_dataset(rng, 30, 5, 3, 1e3 * (rep + 1));
    EXPECT_TRUE(sb::scale_features(s).first.bounded());
  }
}

TEST(ModelFile, RoundTripEveryMapKind) {
  std::mt19937_64 rng(11);
  for (const auto& map : every_map_kind(rng)) {
    const sb::WeightModel model = random_model(rng, map, 4);
    ASSERT_NO_THROW(model.validate());
    const std::string text = sb::model_to_string(model);
    const sb::WeightModel back = sb::model_from_string(text);
    EXPECT_EQ(sb::model_to_string(back), text) << sb::to_string(map.kind);
    EXPECT_EQ(back.weights.support(), model.weights.support());
    const Matrix inputs = oracle::random_matrix(rng, 1000, 3, 2.0);
    EXPECT_EQ(back.predict_rows(inputs), model.predict_rows(inputs)) << sb::to_string(map.kind);
    EXPECT_EQ(back.features_rows(inputs), model.features_rows(inputs)) << sb::to_string(map.kind);
  }
}

TEST(ModelFile, ThroughDisk) {
  std::mt19937_64 rng(12);
  const sb::WeightModel model = random_model(rng, sb::FeatureMapDescriptor::quadratic(3), 3);
  const auto path = std::filesystem::temp_directory_path() / "shareboost_test_model.json";
  sb::save_model(path.string(), model);
  const sb::WeightModel back = sb::load_model(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.weights.entries(), model.weights.entries());
  EXPECT_EQ(back.scaling.shift, model.scaling.shift);
}

TEST(ModelFile, RejectsBadDocuments) {
  EXPECT_THROW(sb::model_from_string("{"), sb::InputError);
  EXPECT_THROW(sb::model_from_string("{\"format_version\": 99}"), sb::InputError);
  std::mt19937_64 rng(13);
  const std::string good = sb::model_to_string(random_model(rng, sb::FeatureMapDescriptor::identity(3), 2));
  auto j = nlohmann::json::parse(good);
  j["d"] = 7;
  EXPECT_THROW(sb::model_from_string(j.dump()), sb::InputError);
  EXPECT_THROW(sb::load_model("/nonexistent/model.json"), sb::InputError);
}

TEST(TraceFile, RoundTripAndRowCount) {
  sb::TrainTrace trace;
  for (std::size_t t = 1; t <= 5; ++t) {
    sb::RoundRecord r;
    r.round = t;
    r.selected = 10 * t;
    r.score = 1.0 / (3.0 * static_cast<double>(t));
    r.train_loss = std::exp(-static_cast<double>(t));
    r.train_error = 0.1 * static_cast<double>(5 - t);
    if (t % 2 == 0) r.heldout_error = 0.05;
    r.support_size = t;
    trace.rounds.push_back(r);
  }
  std::stringstream buf;
  sb::write_trace(buf, trace);
  const std::string text = buf.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), sb::kTraceHeader);
  const auto rows = sb::read_trace(buf);
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(rows[i].round, trace.rounds[i].round);
    EXPECT_EQ(rows[i].selected, trace.rounds[i].selected);
    EXPECT_EQ(rows[i].score, trace.rounds[i].score);
    EXPECT_EQ(rows[i].train_loss, trace.rounds[i].train_loss);
    EXPECT_EQ(rows[i].train_error, trace.rounds[i].train_error);
    EXPECT_EQ(std::isnan(rows[i].heldout_error), std::isnan(trace.rounds[i].heldout_error));
    EXPECT_EQ(rows[i].support_size, trace.rounds[i].support_size);
  }
  std::ostringstream table;
  sb::write_path_table(table, rows);
  std::size_t lines = 0;
  for (char c : table.str()) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 6u);
}

TEST(TraceFile, MalformedRow) {
  std::istringstream in("round\tselected_index\n1\t2\t3\n");
  EXPECT_THROW(sb::read_trace(in), sb::InputError);
}
