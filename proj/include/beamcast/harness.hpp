#pragma once

// Experiment driver: scenario synthesis -> MVDR -> forecasters, k-fold sweeps
// and result files.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/array_model.hpp"
#include "beamcast/beamformer.hpp"
#include "beamcast/lstm.hpp"
#include "beamcast/nar.hpp"
#include "beamcast/timeseries.hpp"

namespace beamcast {

struct ScenarioConfig {
  ArrayConfig<double> array;
  double desired_azimuth_deg = 45.0;
  double elevation_deg = 0.0;
  int num_samples = 361;
  double snr_db = 20.0;
  // Interferers are placed relative to the desired source so that sweeps over
  // the desired azimuth keep the same geometry.
  std::vector<double> interferer_offsets_deg{30.0};
  double inr_db = 10.0;
  std::uint64_t seed = 0;

  int pulse_period = 10;  // <= 0 or >= num_samples: a single pulse
  double pulse_on_fraction = 0.5;
  // Diagonal loading relative to trace/N. The covariance includes the desired
  // signal; with few snapshots per sensor a near-zero loading lets MVDR
  // cancel part of the signal against its sample correlation with the
  // interferer, so the scenario loads ~10 dB above the noise floor.
  double loading_relative = 0.1;
  double sample_rate_hz = 1000.0;

  // Radio-planning figures of the V2I layout. Carried as metadata only.
  double rsu_height_m = 25.0;
  double inter_site_distance_m = 200.0;
  double tx_power_dbm = 23.0;
  double rsu_noise_figure_db = 5.0;
  double ue_noise_figure_db = 7.0;

  void validate() const;
};

struct Dataset {
  SnapshotMatrix<double> snapshots;
  Eigen::VectorXcd transmitted;
  std::vector<double> interferer_azimuths_deg;  // after alias resolution
  CovarianceMatrix<double> covariance;
  Eigen::VectorXcd steering;
  BeamWeights<double> weights;
  Eigen::VectorXcd beamformed;
  Series series;  // channelized beamformed signal, not standardized
};

/// Absolute interferer azimuths; an offset whose direction cosine would
/// coincide with the desired one (ULA front/back ambiguity) is mirrored.
std::vector<double> resolve_interferers(const ScenarioConfig& cfg);

Dataset generate_dataset(const ScenarioConfig& cfg);

/// Azimuthal span designations 1..10 (codes 3 and 4 share the same span).
std::pair<double, double> span_code_to_range(int code);

enum class Model { Lstm, Nar };
enum class ModelChoice { Lstm, Nar, Both };
enum class SweepAxis { IncidentAngle, AzimuthSpan, AntennaCount };

std::string to_string(Model m);
std::string to_string(SweepAxis a);
Model parse_model(const std::string& s);
ModelChoice parse_model_choice(const std::string& s);
SweepAxis parse_axis(const std::string& s);
std::vector<Model> models_of(ModelChoice c);

/// Tuned for the sweeps: smaller and faster than the forecaster defaults.
LstmTrainConfig harness_lstm_config();
NarConfig harness_nar_config();

/// Throws unless validation and training indices are disjoint and together
/// cover [0, length).
void check_fold_isolation(const Fold& fold, Eigen::Index length);

/// Trains on the fold's training segments and returns the one-step-ahead
/// (state-updating) RMSE over its validation block, in units standardized
/// with the training statistics.
double evaluate_fold(Model model, const Eigen::MatrixXd& channels, const Fold& fold, const LstmTrainConfig& lstm_cfg,
                     const NarConfig& nar_cfg);

struct HoldoutEvaluation {
  Eigen::Index train_length = 0;
  Eigen::Index test_length = 0;
  StandardizationStats stats;
  Eigen::MatrixXd actual;       // standardized test block
  Eigen::MatrixXd updating;     // teacher-forced forecasts of `actual`
  Eigen::MatrixXd closed_loop;  // free-running forecasts of `actual`
  double rmse_updating = 0;
  double rmse_closed_loop = 0;
  std::vector<double> training_curve;  // loss (LSTM) or SSE (NAR)
};

struct HoldoutForecast {
  Eigen::MatrixXd updating;
  Eigen::MatrixXd closed_loop;
};

/// Forecasts columns [train_length, T) of the standardized series `z`:
/// teacher-forced from observed values, and free-running from the end of
/// the training block.
HoldoutForecast forecast_holdout(const LstmParams& p, const Eigen::MatrixXd& z, Eigen::Index train_length);
HoldoutForecast forecast_holdout(const NarParams& p, const Eigen::MatrixXd& z, Eigen::Index train_length);

/// Chronological train/test split, train on the head, forecast the tail.
HoldoutEvaluation evaluate_holdout(Model model, const Series& raw, double train_fraction,
                                   const LstmTrainConfig& lstm_cfg, const NarConfig& nar_cfg);

struct SweepSpec {
  SweepAxis axis = SweepAxis::IncidentAngle;
  std::vector<double> values;
  ModelChoice model = ModelChoice::Both;
  int k = 10;

  void validate() const;
};

std::vector<double> default_sweep_values(SweepAxis axis);

struct SweepRecord {
  double value = 0;
  Model model = Model::Lstm;
  int fold = 0;
  double rmse = 0;
};

struct SweepSummary {
  double value = 0;
  Model model = Model::Lstm;
  double min = 0;
  double mean = 0;
  double max = 0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::IncidentAngle;
  std::vector<SweepRecord> records;     // ordered by value, model, fold
  std::vector<SweepSummary> summaries;  // ordered by value, model
};

std::vector<SweepSummary> summarize(const std::vector<SweepRecord>& records);

/// Runs every (value, model, fold) cell; `jobs` worker threads (<= 0: all
/// hardware threads). Output is independent of `jobs`.
SweepResult run_sweep(const SweepSpec& spec, const ScenarioConfig& base, const LstmTrainConfig& lstm_cfg,
                      const NarConfig& nar_cfg, int jobs = 1);

/// records.csv, summary.csv and sweep_<axis>.svg; returns the written paths.
std::vector<std::filesystem::path> write_results(const SweepResult& r, const std::filesystem::path& out_dir);

std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path);
std::vector<SweepSummary> read_summary_csv(const std::filesystem::path& path);

}  // namespace beamcast
