#include "beamcast/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "beamcast/error.hpp"
#include "beamcast/io.hpp"
#include "beamcast/plot.hpp"

namespace beamcast {
namespace {

// splitmix64 finalizer; combines seeds and cell coordinates into one stream seed.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t seed, Rest... rest) {
  std::uint64_t h = mix(seed);
  ((h = mix(h ^ static_cast<std::uint64_t>(rest))), ...);
  return h;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

double wrap_deg(double a) { return std::remainder(a, 360.0); }

// Maximal runs [begin, end) of a sorted index list.
std::vector<std::pair<Eigen::Index, Eigen::Index>> runs_of(std::vector<Eigen::Index> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<std::pair<Eigen::Index, Eigen::Index>> runs;
  for (Eigen::Index t : idx) {
    if (!runs.empty() && runs.back().second == t)
      ++runs.back().second;
    else
      runs.emplace_back(t, t + 1);
  }
  return runs;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

void ScenarioConfig::validate() const {
  array.validate();
  if (num_samples < 4) throw Error(Errc::InvalidConfig, "num_samples must be >= 4");
  if (!(desired_azimuth_deg >= -180 && desired_azimuth_deg <= 180))
    throw Error(Errc::InvalidConfig, "desired_azimuth_deg must lie in [-180, 180]");
  if (!(elevation_deg >= -90 && elevation_deg <= 90))
    throw Error(Errc::InvalidConfig, "elevation_deg must lie in [-90, 90]");
  if (!std::isfinite(snr_db) || !std::isfinite(inr_db)) throw Error(Errc::InvalidConfig, "snr_db and inr_db must be finite");
  for (double off : interferer_offsets_deg)
    if (!(std::abs(wrap_deg(off)) >= 5.0))
      throw Error(Errc::InvalidConfig, "interferers must be at least 5 deg away from the desired source");
  if (!(pulse_on_fraction > 0 && pulse_on_fraction <= 1))
    throw Error(Errc::InvalidConfig, "pulse_on_fraction must lie in (0, 1]");
  if (!(loading_relative >= 0)) throw Error(Errc::InvalidConfig, "loading_relative must be >= 0");
  if (!(sample_rate_hz > 0)) throw Error(Errc::InvalidConfig, "sample_rate_hz must be > 0");
}

std::vector<double> resolve_interferers(const ScenarioConfig& cfg) {
  constexpr double kMinSineGap = 0.05;
  const double ce = std::cos(deg2rad(cfg.elevation_deg));
  const double u0 = std::sin(deg2rad(cfg.desired_azimuth_deg)) * ce;
  auto aliases = [&](double az) { return std::abs(std::sin(deg2rad(az)) * ce - u0) < kMinSineGap; };
  std::vector<double> out;
  for (double off : cfg.interferer_offsets_deg) {
    double az = wrap_deg(cfg.desired_azimuth_deg + off);
    if (aliases(az)) az = wrap_deg(cfg.desired_azimuth_deg - off);
    if (aliases(az))
      throw Error(Errc::InvalidConfig, "interferer offset " + format_double(off) +
                                           " deg is unresolvable from the desired direction by this array");
    out.push_back(az);
  }
  return out;
}

Dataset generate_dataset(const ScenarioConfig& cfg) {
  cfg.validate();
  const Eigen::Index T = cfg.num_samples;
  Dataset d;
  const std::complex<double> amplitude(std::sqrt(0.5), std::sqrt(0.5));
  d.transmitted = rectangular_pulse_train<double>(T, cfg.pulse_period, cfg.pulse_on_fraction, amplitude);
  const double signal_power = d.transmitted.squaredNorm() / static_cast<double>(T);
  const double noise_var = signal_power / std::pow(10.0, cfg.snr_db / 10.0);

  std::vector<PlaneWaveSource<double>> sources;
  sources.push_back({cfg.desired_azimuth_deg, cfg.elevation_deg, d.transmitted, SourceKind::Desired});
  d.interferer_azimuths_deg = resolve_interferers(cfg);
  const double interferer_sd = std::sqrt(noise_var * std::pow(10.0, cfg.inr_db / 10.0) / 2.0);
  for (std::size_t i = 0; i < d.interferer_azimuths_deg.size(); ++i) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 1 + i));
    std::normal_distribution<double> gauss(0.0, interferer_sd);
    Eigen::VectorXcd w(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const double re = gauss(rng);
      w(t) = {re, gauss(rng)};
    }
    sources.push_back({d.interferer_azimuths_deg[i], cfg.elevation_deg, std::move(w), SourceKind::Interference});
  }

  d.snapshots = collect_plane_waves(cfg.array, sources, T);
  d.snapshots.sample_rate_hz = cfg.sample_rate_hz;
  d.snapshots = add_noise_with_variance(std::move(d.snapshots), noise_var, derive_seed(cfg.seed, 0));
  d.covariance = sample_covariance_relative_loading(d.snapshots, cfg.loading_relative);
  d.steering = steering_vector(cfg.array, cfg.desired_azimuth_deg, cfg.elevation_deg);
  d.weights = mvdr_weights(d.covariance, d.steering);
  d.beamformed = beamform(d.weights, d.snapshots);
  d.series = channelize(d.beamformed);
  return d;
}

std::pair<double, double> span_code_to_range(int code) {
  static constexpr double kHalfWidth[] = {30, 45, 60, 60, 70, 80, 90, 100, 110, 120};
  if (code < 1 || code > 10) throw Error(Errc::UnknownCode, "azimuthal span code " + std::to_string(code));
  const double w = kHalfWidth[code - 1];
  return {-w, w};
}

std::string to_string(Model m) { return m == Model::Lstm ? "LSTM" : "NAR"; }

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::IncidentAngle: return "incident";
    case SweepAxis::AzimuthSpan: return "span";
    case SweepAxis::AntennaCount: return "antennas";
  }
  return "?";
}

Model parse_model(const std::string& s) {
  if (s == "lstm" || s == "LSTM") return Model::Lstm;
  if (s == "nar" || s == "NAR") return Model::Nar;
  throw Error(Errc::InvalidConfig, "unknown model '" + s + "'");
}

ModelChoice parse_model_choice(const std::string& s) {
  if (s == "both" || s == "BOTH") return ModelChoice::Both;
  return parse_model(s) == Model::Lstm ? ModelChoice::Lstm : ModelChoice::Nar;
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "incident") return SweepAxis::IncidentAngle;
  if (s == "span") return SweepAxis::AzimuthSpan;
  if (s == "antennas") return SweepAxis::AntennaCount;
  throw Error(Errc::InvalidConfig, "unknown sweep axis '" + s + "' (incident|span|antennas)");
}

std::vector<Model> models_of(ModelChoice c) {
  switch (c) {
    case ModelChoice::Lstm: return {Model::Lstm};
    case ModelChoice::Nar: return {Model::Nar};
    case ModelChoice::Both: return {Model::Lstm, Model::Nar};
  }
  return {};
}

LstmTrainConfig harness_lstm_config() {
  LstmTrainConfig c;
  c.hidden_size = 32;
  c.epochs = 150;
  c.learning_rate = 1e-2;
  return c;
}

NarConfig harness_nar_config() { return NarConfig{}; }

void check_fold_isolation(const Fold& fold, Eigen::Index length) {
  std::vector<char> seen(static_cast<std::size_t>(length), 0);
  auto mark = [&](const std::vector<Eigen::Index>& idx, char tag) {
    for (Eigen::Index t : idx) {
      if (t < 0 || t >= length) throw Error(Errc::DegenerateSplit, "fold index out of range");
      auto& s = seen[static_cast<std::size_t>(t)];
      if (s) throw Error(Errc::DegenerateSplit, "index " + std::to_string(t) + " is in both training and validation");
      s = tag;
    }
  };
  mark(fold.validation, 'v');
  mark(fold.train, 't');
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw Error(Errc::DegenerateSplit, "fold does not cover every index");
}

double evaluate_fold(Model model, const Eigen::MatrixXd& channels, const Fold& fold, const LstmTrainConfig& lstm_cfg,
                     const NarConfig& nar_cfg) {
  const Eigen::Index T = channels.cols();
  check_fold_isolation(fold, T);
  const auto val_runs = runs_of(fold.validation);
  if (val_runs.size() != 1) throw Error(Errc::DegenerateSplit, "validation block must be contiguous");
  const auto [a, b] = val_runs.front();
  const auto train_runs = runs_of(fold.train);

  const StandardizationStats stats =
      fit_standardization(gather(channels, fold.train), ConstantChannelPolicy::UnitScale);
  const Eigen::MatrixXd z = (channels.colwise() - stats.mean).array().colwise() / stats.std.array();

  if (model == Model::Lstm) {
    std::vector<SupervisedWindows> sequences;
    for (auto [s, e] : train_runs)
      if (e - s >= 2) sequences.push_back(make_supervised(Eigen::MatrixXd(z.middleCols(s, e - s))));
    if (sequences.empty()) throw Error(Errc::DegenerateSplit, "no training segment of length >= 2");
    const auto trained = train_lstm(sequences, lstm_cfg);
    const Eigen::Index t0 = std::max<Eigen::Index>(a, 1);
    if (t0 >= b) throw Error(Errc::TooShort, "validation block has no forecastable target");
    // Forecast of time t uses observed values up to t - 1 only.
    const auto roll = predict_updating(trained.params, z.leftCols(b - 1));
    return rmse(roll.predictions.middleCols(t0 - 1, b - t0), z.middleCols(t0, b - t0));
  }

  const int p = nar_cfg.delays;
  std::vector<LaggedWindows> parts;
  for (auto [s, e] : train_runs) {
    if (e - s <= p) continue;
    auto w = make_lagged(Eigen::MatrixXd(z.middleCols(s, e - s)), p);
    for (auto& t : w.target_index) t += s;
    parts.push_back(std::move(w));
  }
  const LaggedWindows windows = concat(parts);
  if (windows.size() == 0) throw Error(Errc::DegenerateSplit, "no training segment longer than the delay line");
  for (Eigen::Index t : windows.target_index)
    if (t >= a && t < b) throw Error(Errc::DegenerateSplit, "validation target leaked into training windows");
  const auto trained = train_lm(windows, nar_cfg);
  const Eigen::Index t0 = std::max<Eigen::Index>(a, p);
  if (t0 >= b) throw Error(Errc::TooShort, "validation block has no target with a full delay line");
  const Eigen::MatrixXd pred = nar_predict_updating(trained.params, z.leftCols(b));
  return rmse(pred.middleCols(t0 - p, b - t0), z.middleCols(t0, b - t0));
}

HoldoutForecast forecast_holdout(const LstmParams& p, const Eigen::MatrixXd& z, Eigen::Index train_length) {
  const Eigen::Index T = z.cols(), n = train_length, m = T - n;
  if (n < 1 || m < 1) throw Error(Errc::DegenerateSplit, "holdout needs non-empty train and test blocks");
  HoldoutForecast f;
  f.updating = predict_updating(p, z.leftCols(T - 1)).predictions.rightCols(m);
  const LstmState warm = n > 1 ? predict_updating(p, z.leftCols(n - 1)).final_state : LstmState::zeros(p.hidden_size);
  f.closed_loop = predict_closed_loop(p, warm, z.col(n - 1), m);
  return f;
}

HoldoutForecast forecast_holdout(const NarParams& p, const Eigen::MatrixXd& z, Eigen::Index train_length) {
  const Eigen::Index T = z.cols(), n = train_length, m = T - n;
  if (n < p.delays || m < 1) throw Error(Errc::TooShort, "training block shorter than the delay line");
  HoldoutForecast f;
  f.updating = nar_predict_updating(p, z).rightCols(m);
  f.closed_loop = nar_predict_closed_loop(p, z.middleCols(n - p.delays, p.delays), m);
  return f;
}

HoldoutEvaluation evaluate_holdout(Model model, const Series& raw, double train_fraction,
                                   const LstmTrainConfig& lstm_cfg, const NarConfig& nar_cfg) {
  const auto [train, test] = split_train_test(raw, train_fraction);
  HoldoutEvaluation h;
  h.train_length = train.length();
  h.test_length = test.length();
  h.stats = fit_standardization(train.channels, ConstantChannelPolicy::UnitScale);
  const Eigen::MatrixXd z = apply_standardization(raw, h.stats).channels;
  const Eigen::Index n = h.train_length;
  h.actual = z.rightCols(h.test_length);

  HoldoutForecast f;
  if (model == Model::Lstm) {
    const auto trained = train_lstm(make_supervised(Eigen::MatrixXd(z.leftCols(n))), lstm_cfg);
    h.training_curve = trained.loss_curve;
    f = forecast_holdout(trained.params, z, n);
  } else {
    if (n <= nar_cfg.delays) throw Error(Errc::TooShort, "training split is not longer than the delay line");
    const auto trained = train_lm(make_lagged(Eigen::MatrixXd(z.leftCols(n)), nar_cfg.delays), nar_cfg);
    h.training_curve = trained.sse;
    f = forecast_holdout(trained.params, z, n);
  }
  h.updating = std::move(f.updating);
  h.closed_loop = std::move(f.closed_loop);
  h.rmse_updating = rmse(h.updating, h.actual);
  h.rmse_closed_loop = rmse(h.closed_loop, h.actual);
  return h;
}

void SweepSpec::validate() const {
  if (values.empty()) throw Error(Errc::InvalidConfig, "sweep needs at least one value");
  if (k < 2) throw Error(Errc::InvalidK, "k must be at least 2");
  for (double v : values) {
    switch (axis) {
      case SweepAxis::IncidentAngle:
        if (!(v >= -180 && v <= 180)) throw Error(Errc::InvalidConfig, "incident angle out of range");
        break;
      case SweepAxis::AzimuthSpan:
        if (!is_integral(v)) throw Error(Errc::UnknownCode, "span codes are integers");
        span_code_to_range(static_cast<int>(v));
        break;
      case SweepAxis::AntennaCount:
        if (!is_integral(v) || v < 1 || v > 1e6) throw Error(Errc::InvalidConfig, "antenna counts are positive integers");
        break;
    }
  }
}

std::vector<double> default_sweep_values(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::IncidentAngle: return {40, 50, 60, 70, 80, 90, 100};
    case SweepAxis::AzimuthSpan: return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    case SweepAxis::AntennaCount: return {4, 8, 16, 32, 64};
  }
  return {};
}

std::vector<SweepSummary> summarize(const std::vector<SweepRecord>& records) {
  std::vector<SweepSummary> out;
  std::vector<std::size_t> counts;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SweepSummary& s) { return s.value == r.value && s.model == r.model; });
    if (it == out.end()) {
      out.push_back({r.value, r.model, r.rmse, 0.0, r.rmse});
      counts.push_back(0);
      it = out.end() - 1;
    }
    auto& n = counts[static_cast<std::size_t>(it - out.begin())];
    it->min = std::min(it->min, r.rmse);
    it->max = std::max(it->max, r.rmse);
    it->mean += r.rmse;
    ++n;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].mean /= static_cast<double>(counts[i]);
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& base, const LstmTrainConfig& lstm_cfg,
                      const NarConfig& nar_cfg, int jobs) {
  spec.validate();
  base.validate();
  lstm_cfg.validate();
  nar_cfg.validate();
  const auto models = models_of(spec.model);
  const auto folds = kfold_partitions(base.num_samples, spec.k, base.seed);

  // Datasets are built serially up front; the span axis draws a new desired
  // azimuth (hence a new dataset) for every fold.
  std::vector<std::vector<Eigen::MatrixXd>> data(spec.values.size());
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    const double value = spec.values[v];
    ScenarioConfig cfg = base;
    if (spec.axis == SweepAxis::IncidentAngle) cfg.desired_azimuth_deg = value;
    if (spec.axis == SweepAxis::AntennaCount) cfg.array.num_elements = static_cast<int>(value);
    if (spec.axis != SweepAxis::AzimuthSpan) {
      data[v].push_back(generate_dataset(cfg).series.channels);
      continue;
    }
    const auto [lo, hi] = span_code_to_range(static_cast<int>(value));
    data[v].resize(folds.size());
    for (const Fold& f : folds) {
      std::mt19937_64 rng(derive_seed(base.seed, bits(value), f.index, 0x5350414eULL));
      cfg.desired_azimuth_deg = std::uniform_real_distribution<double>(lo, hi)(rng);
      data[v][static_cast<std::size_t>(f.index)] = generate_dataset(cfg).series.channels;
    }
  }

  struct Cell {
    std::size_t value;
    Model model;
    const Fold* fold;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < spec.values.size(); ++v)
    for (Model m : models)
      for (const Fold& f : folds) cells.push_back({v, m, &f});

  std::vector<double> rmse_out(cells.size(), 0.0);
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; !failed && (i = next.fetch_add(1)) < cells.size();) {
      const Cell& c = cells[i];
      try {
        const double value = spec.values[c.value];
        const int f = c.fold->index;
        LstmTrainConfig lc = lstm_cfg;
        NarConfig nc = nar_cfg;
        lc.seed = derive_seed(lstm_cfg.seed, bits(value), f);
        nc.seed = derive_seed(nar_cfg.seed, bits(value), f);
        const auto& ds = data[c.value];
        const Eigen::MatrixXd& channels = ds.size() == 1 ? ds.front() : ds[static_cast<std::size_t>(f)];
        rmse_out[i] = evaluate_fold(c.model, channels, *c.fold, lc, nc);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  unsigned n_workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min<unsigned>(n_workers, static_cast<unsigned>(cells.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    const std::string where = "sweep " + to_string(spec.axis) + " value " + format_double(spec.values[cells[i].value]) +
                              ", " + to_string(cells[i].model) + ", fold " + std::to_string(cells[i].fold->index) +
                              ": ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }

  SweepResult r;
  r.axis = spec.axis;
  for (std::size_t i = 0; i < cells.size(); ++i)
    r.records.push_back({spec.values[cells[i].value], cells[i].model, cells[i].fold->index, rmse_out[i]});
  // Cells were enumerated value-major then model; only fold order needs fixing.
  for (std::size_t start = 0; start < r.records.size(); start += folds.size())
    std::sort(r.records.begin() + static_cast<std::ptrdiff_t>(start),
              r.records.begin() + static_cast<std::ptrdiff_t>(start + folds.size()),
              [](const SweepRecord& x, const SweepRecord& y) { return x.fold < y.fold; });
  r.summaries = summarize(r.records);
  return r;
}

std::vector<std::filesystem::path> write_results(const SweepResult& r, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  const std::string axis = to_string(r.axis);

  std::string records = "axis,value,model,fold,rmse\n";
  for (const auto& x : r.records)
    records += axis + "," + format_double(x.value) + "," + to_string(x.model) + "," + std::to_string(x.fold) + "," +
               format_double(x.rmse) + "\n";
  std::string summary = "axis,value,model,min,mean,max\n";
  for (const auto& s : r.summaries)
    summary += axis + "," + format_double(s.value) + "," + to_string(s.model) + "," + format_double(s.min) + "," +
               format_double(s.mean) + "," + format_double(s.max) + "\n";

  std::vector<PlotSeries> series;
  for (Model m : {Model::Lstm, Model::Nar}) {
    PlotSeries ps;
    ps.name = to_string(m) + " mean";
    for (const auto& s : r.summaries) {
      if (s.model != m) continue;
      ps.x.push_back(s.value);
      ps.y.push_back(s.mean);
      ps.lo.push_back(s.min);
      ps.hi.push_back(s.max);
    }
    if (!ps.x.empty()) series.push_back(std::move(ps));
  }
  PlotOptions opt;
  opt.title = "One-step forecast RMSE, min/max band over folds";
  opt.x_label = r.axis == SweepAxis::IncidentAngle ? "incident angle (deg)"
                : r.axis == SweepAxis::AzimuthSpan ? "azimuthal span code"
                                                   : "antenna elements";
  opt.y_label = "RMSE (standardized)";
  opt.log_y = true;

  const std::vector<std::filesystem::path> paths{out_dir / "records.csv", out_dir / "summary.csv",
                                                 out_dir / ("sweep_" + axis + ".svg")};
  write_text(paths[0], records);
  write_text(paths[1], summary);
  write_text(paths[2], series.empty() ? std::string() : svg_line_chart(series, opt));
  return paths;
}

std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"axis", "value", "model", "fold", "rmse"})
    throw Error(Errc::IoError, path.string() + ": not a records table");
  std::vector<SweepRecord> out;
  for (const auto& row : t.rows)
    out.push_back({parse_double(row[1]), parse_model(row[2]), static_cast<int>(parse_double(row[3])),
                   parse_double(row[4])});
  return out;
}

std::vector<SweepSummary> read_summary_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"axis", "value", "model", "min", "mean", "max"})
    throw Error(Errc::IoError, path.string() + ": not a summary table");
  std::vector<SweepSummary> out;
  for (const auto& row : t.rows)
    out.push_back({parse_double(row[1]), parse_model(row[2]), parse_double(row[3]), parse_double(row[4]),
                   parse_double(row[5])});
  return out;
}

}  // namespace beamcast
