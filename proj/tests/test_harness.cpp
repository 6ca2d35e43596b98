#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "beamcast/error.hpp"
#include "beamcast/harness.hpp"
#include "beamcast/io.hpp"
#include "temp_dir.hpp"

using namespace beamcast;

namespace {

// Small enough for sub-second sweeps.
ScenarioConfig tiny_scenario() {
  ScenarioConfig c;
  c.array.num_elements = 8;
  c.num_samples = 60;
  return c;
}

LstmTrainConfig tiny_lstm() {
  LstmTrainConfig c;
  c.hidden_size = 4;
  c.epochs = 5;
  c.learning_rate = 1e-2;
  return c;
}

NarConfig tiny_nar() {
  NarConfig c;
  c.delays = 2;
  c.hidden_neurons = 3;
  c.max_iterations = 5;
  return c;
}

// Tag-balance check, enough to catch truncated or interleaved output.
bool well_formed_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t pos = 0;
  while ((pos = s.find('<', pos)) != std::string::npos) {
    const std::size_t end = s.find('>', pos);
    if (end == std::string::npos) return false;
    const std::string tag = s.substr(pos + 1, end - pos - 1);
    pos = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '?' || tag[0] == '!') continue;
    if (tag.back() == '/') continue;
    const std::string name = tag.substr(tag[0] == '/' ? 1 : 0, tag.find_first_of(" \t\n") - (tag[0] == '/' ? 1 : 0));
    if (tag[0] == '/') {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("default dataset has 361 two-channel samples from 64 sensors") {
  const ScenarioConfig cfg;
  const auto d = generate_dataset(cfg);
  CHECK(d.snapshots.num_samples() == 361);
  CHECK(d.snapshots.num_elements() == 64);
  CHECK(d.series.length() == 361);
  CHECK(d.series.num_channels() == 2);
  CHECK_FALSE(d.series.standardized);
  REQUIRE(d.interferer_azimuths_deg.size() == 1);
  CHECK(d.interferer_azimuths_deg[0] == doctest::Approx(75.0));
  CHECK(std::abs(d.weights.data.dot(d.steering) - 1.0) < 1e-8);
}

TEST_CASE("noiseless scenario without interference recovers the pulse") {
  ScenarioConfig cfg;
  cfg.interferer_offsets_deg.clear();
  cfg.snr_db = 300;
  const auto d = generate_dataset(cfg);
  const double err = std::sqrt((d.beamformed - d.transmitted).squaredNorm() / 361.0);
  CHECK(err <= 1e-6);
}

TEST_CASE("dataset is deterministic per seed") {
  ScenarioConfig cfg = tiny_scenario();
  const auto a = generate_dataset(cfg);
  const auto b = generate_dataset(cfg);
  CHECK(a.series.channels == b.series.channels);
  CHECK(a.snapshots.data == b.snapshots.data);
  cfg.seed = 99;
  CHECK(generate_dataset(cfg).series.channels != a.series.channels);
}

TEST_CASE("smaller arrays are prefixes of larger ones") {
  ScenarioConfig small, large;
  small.array.num_elements = 4;
  large.array.num_elements = 64;
  const auto s = generate_dataset(small);
  const auto l = generate_dataset(large);
  CHECK(l.snapshots.data.leftCols(4) == s.snapshots.data);
}

TEST_CASE("interferers aliasing the look direction are mirrored") {
  ScenarioConfig cfg;
  cfg.desired_azimuth_deg = 80;  // +30 lands on 110 deg, nearly the same sine as 80
  const auto az = resolve_interferers(cfg);
  REQUIRE(az.size() == 1);
  CHECK(az[0] == doctest::Approx(50.0));

  cfg.desired_azimuth_deg = 170;  // wraps around
  CHECK(resolve_interferers(cfg)[0] == doctest::Approx(-160.0));

  cfg.interferer_offsets_deg = {3.0};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("InvalidConfig"), Error);
  cfg = ScenarioConfig{};
  cfg.num_samples = 3;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("span code table") {
  CHECK(span_code_to_range(1) == std::pair(-30.0, 30.0));
  CHECK(span_code_to_range(2) == std::pair(-45.0, 45.0));
  CHECK(span_code_to_range(3) == std::pair(-60.0, 60.0));
  CHECK(span_code_to_range(4) == span_code_to_range(3));
  CHECK(span_code_to_range(7) == std::pair(-90.0, 90.0));
  CHECK(span_code_to_range(10) == std::pair(-120.0, 120.0));
  for (int bad : {0, 11, -1}) CHECK_THROWS_WITH_AS(span_code_to_range(bad), doctest::Contains("UnknownCode"), Error);
}

TEST_CASE("fold isolation is checked structurally") {
  for (const auto& f : kfold_partitions(50, 5, 3)) CHECK_NOTHROW(check_fold_isolation(f, 50));
  Fold overlap{0, {0, 1, 2, 3}, {3, 4}};
  CHECK_THROWS_WITH_AS(check_fold_isolation(overlap, 5), doctest::Contains("both"), Error);
  Fold missing{0, {0, 1}, {3, 4}};
  CHECK_THROWS_WITH_AS(check_fold_isolation(missing, 5), doctest::Contains("cover"), Error);
}

TEST_CASE("fold evaluation standardizes with training statistics only") {
  const auto d = generate_dataset(tiny_scenario());
  const auto folds = kfold_partitions(60, 4, 0);
  const Fold& f = folds.front();
  const double base = evaluate_fold(Model::Nar, d.series.channels, f, tiny_lstm(), tiny_nar());
  CHECK(std::isfinite(base));
  CHECK(base > 0);

  // A constant offset disappears under standardization.
  Eigen::MatrixXd shifted = d.series.channels.array() + 3.0;
  CHECK(evaluate_fold(Model::Nar, shifted, f, tiny_lstm(), tiny_nar()) == doctest::Approx(base).epsilon(1e-8));

  // Offsetting the held-out tail by 100: with training-only statistics the
  // error grows by ~100/std; statistics that saw the tail would absorb most of it.
  Fold last;
  for (Eigen::Index t = 0; t < 60; ++t) (t >= 45 ? last.validation : last.train).push_back(t);
  Eigen::MatrixXd corrupted = d.series.channels;
  corrupted.rightCols(15).array() += 100.0;
  const double clean = evaluate_fold(Model::Lstm, d.series.channels, last, tiny_lstm(), tiny_nar());
  const double dirty = evaluate_fold(Model::Lstm, corrupted, last, tiny_lstm(), tiny_nar());
  CHECK(dirty > 10 * clean);
}

TEST_CASE("holdout uses a chronological 80/20 split") {
  ScenarioConfig cfg;
  cfg.array.num_elements = 8;
  const auto d = generate_dataset(cfg);
  const auto h = evaluate_holdout(Model::Nar, d.series, 0.8, tiny_lstm(), tiny_nar());
  CHECK(h.train_length == 288);
  CHECK(h.test_length == 73);
  CHECK(h.updating.cols() == 73);
  CHECK(h.closed_loop.cols() == 73);
  CHECK(h.rmse_updating == doctest::Approx(rmse(h.updating, h.actual)));
  const auto l = evaluate_holdout(Model::Lstm, d.series, 0.8, tiny_lstm(), tiny_nar());
  CHECK(l.training_curve.size() == 5);
  CHECK(l.updating.cols() == 73);
}

TEST_CASE("sweep record counts and summaries") {
  SweepSpec spec;
  spec.axis = SweepAxis::IncidentAngle;
  spec.values = {45};
  spec.k = 2;
  const auto r = run_sweep(spec, tiny_scenario(), tiny_lstm(), tiny_nar());
  CHECK(r.records.size() == 4);
  REQUIRE(r.summaries.size() == 2);
  for (const auto& s : r.summaries) {
    std::vector<double> v;
    for (const auto& x : r.records)
      if (x.value == s.value && x.model == s.model) v.push_back(x.rmse);
    REQUIRE(v.size() == 2);
    CHECK(std::abs(s.mean - std::accumulate(v.begin(), v.end(), 0.0) / 2.0) <= 1e-12);
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
  }
  CHECK(r.records[0].model == Model::Lstm);
  CHECK(r.records[0].fold == 0);
  CHECK(r.records[1].fold == 1);
  CHECK(r.records[2].model == Model::Nar);
}

TEST_CASE("sweep output does not depend on the worker count") {
  SweepSpec spec;
  spec.axis = SweepAxis::AntennaCount;
  spec.values = {4, 8};
  spec.k = 3;
  const auto serial = run_sweep(spec, tiny_scenario(), tiny_lstm(), tiny_nar(), 1);
  const auto parallel = run_sweep(spec, tiny_scenario(), tiny_lstm(), tiny_nar(), 4);
  REQUIRE(serial.records.size() == 12);
  REQUIRE(parallel.records.size() == 12);
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(serial.records[i].value == parallel.records[i].value);
    CHECK(serial.records[i].model == parallel.records[i].model);
    CHECK(serial.records[i].fold == parallel.records[i].fold);
    CHECK(serial.records[i].rmse == parallel.records[i].rmse);
  }
}

TEST_CASE("span sweep draws a new look direction per fold") {
  SweepSpec spec;
  spec.axis = SweepAxis::AzimuthSpan;
  spec.values = {1, 10};
  spec.model = ModelChoice::Nar;
  spec.k = 3;
  const auto r = run_sweep(spec, tiny_scenario(), tiny_lstm(), tiny_nar());
  CHECK(r.records.size() == 6);
  CHECK(r.summaries.size() == 2);
  // Folds see different datasets, so their errors differ.
  CHECK(r.records[0].rmse != r.records[1].rmse);
}

TEST_CASE("sweep spec validation") {
  SweepSpec spec;
  CHECK_THROWS_AS(spec.validate(), Error);  // no values
  spec.values = {45};
  spec.k = 1;
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("InvalidK"), Error);
  spec.k = 10;
  spec.axis = SweepAxis::AzimuthSpan;
  spec.values = {11};
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("UnknownCode"), Error);
  spec.axis = SweepAxis::AntennaCount;
  spec.values = {2.5};
  CHECK_THROWS_AS(spec.validate(), Error);
  spec.values = {4, 8, 16, 32, 64};
  CHECK_NOTHROW(spec.validate());
  CHECK(default_sweep_values(SweepAxis::IncidentAngle).size() == 7);
  CHECK(default_sweep_values(SweepAxis::AzimuthSpan).size() == 10);
  CHECK(default_sweep_values(SweepAxis::AntennaCount) == std::vector<double>{4, 8, 16, 32, 64});
}

TEST_CASE("a failing cell aborts the sweep with its coordinates") {
  SweepSpec spec;
  spec.values = {45};
  spec.model = ModelChoice::Nar;
  spec.k = 10;
  ScenarioConfig cfg = tiny_scenario();
  cfg.num_samples = 20;  // folds of two samples cannot feed a three-lag model
  NarConfig nar = tiny_nar();
  nar.delays = 3;
  CHECK_THROWS_WITH_AS(run_sweep(spec, cfg, tiny_lstm(), nar), doctest::Contains("NAR, fold 0"), Error);
}

TEST_CASE("result files: counts, summary round trip, plot") {
  SweepSpec spec;
  spec.axis = SweepAxis::IncidentAngle;
  spec.values = {40, 50};
  spec.k = 2;
  const auto r = run_sweep(spec, tiny_scenario(), tiny_lstm(), tiny_nar());
  TempDir dir;
  const auto files = write_results(r, dir / "results");
  REQUIRE(files.size() == 3);
  for (const auto& f : files) CHECK(std::filesystem::exists(f));

  const auto table = read_csv(files[0]);
  CHECK(table.header == std::vector<std::string>{"axis", "value", "model", "fold", "rmse"});
  CHECK(table.rows.size() == 2 * 2 * 2);
  CHECK(table.rows[0][0] == "incident");

  const auto records = read_records_csv(files[0]);
  REQUIRE(records.size() == r.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(records[i].rmse == r.records[i].rmse);

  const auto summaries = read_summary_csv(files[1]);
  REQUIRE(summaries.size() == r.summaries.size());
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    CHECK(summaries[i].value == r.summaries[i].value);
    CHECK(summaries[i].model == r.summaries[i].model);
    CHECK(summaries[i].min == r.summaries[i].min);
    CHECK(summaries[i].mean == r.summaries[i].mean);
    CHECK(summaries[i].max == r.summaries[i].max);
  }

  const std::string svg = read_text(files[2]);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(well_formed_xml(svg));
}

TEST_CASE("model and axis names") {
  CHECK(parse_axis("incident") == SweepAxis::IncidentAngle);
  CHECK(parse_axis("span") == SweepAxis::AzimuthSpan);
  CHECK(parse_axis("antennas") == SweepAxis::AntennaCount);
  CHECK_THROWS_AS(parse_axis("elevation"), Error);
  CHECK(parse_model_choice("both") == ModelChoice::Both);
  CHECK(models_of(ModelChoice::Both).size() == 2);
  CHECK(to_string(Model::Lstm) == "LSTM");
  CHECK(to_string(SweepAxis::AntennaCount) == "antennas");
}
