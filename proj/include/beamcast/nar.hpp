#pragma once

// Nonlinear autoregressive forecaster: a tapped-delay-line network
// y(t) = W2 act(W1 [y(t-1); ...; y(t-p)] + b1) + b2, trained by Levenberg-Marquardt.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/timeseries.hpp"

namespace beamcast {

enum class NarActivation { Tanh, Identity };

struct NarConfig {
  int delays = 8;
  /// 0 selects a purely linear autoregression y(t) = W lags + b.
  int hidden_neurons = 10;
  double mu_init = 1e-3;
  double mu_increase = 10.0;
  double mu_decrease = 0.1;
  double mu_min = 1e-10;
  double mu_max = 1e10;
  int max_iterations = 200;
  double min_relative_change = 1e-12;
  std::uint64_t seed = 0;
  NarActivation activation = NarActivation::Tanh;

  void validate() const;
};

/// All weights in one flat vector chi. Layout (column-major blocks):
/// W1 (hidden x p*C), b1 (hidden), W2 (C x hidden), b2 (C); with no hidden
/// layer just W (C x p*C), b (C).
struct NarParams {
  int delays = 0;
  int hidden = 0;
  int channels = 0;
  NarActivation activation = NarActivation::Tanh;
  Eigen::VectorXd chi;

  static Eigen::Index parameter_count(int delays, int hidden, int channels);
  static NarParams zeros(int delays, int hidden, int channels, NarActivation act = NarActivation::Tanh);
  /// uniform(-0.5, 0.5) for every entry.
  static NarParams initialize(int delays, int hidden, int channels, std::uint64_t seed,
                              NarActivation act = NarActivation::Tanh);

  int input_width() const { return delays * channels; }

  Eigen::Map<const Eigen::MatrixXd> w1() const;
  Eigen::Map<const Eigen::VectorXd> b1() const;
  Eigen::Map<const Eigen::MatrixXd> w2() const;
  Eigen::Map<const Eigen::VectorXd> b2() const;
  Eigen::Map<Eigen::MatrixXd> w1();
  Eigen::Map<Eigen::VectorXd> b1();
  Eigen::Map<Eigen::MatrixXd> w2();
  Eigen::Map<Eigen::VectorXd> b2();
};

/// One forecast from stacked lags [y(t-1); ...; y(t-p)].
Eigen::VectorXd nar_forward(const NarParams& params, const Eigen::VectorXd& lags);
/// Column-wise forecasts for a p*C x M lag matrix.
Eigen::MatrixXd nar_forward_batch(const NarParams& params, const Eigen::MatrixXd& lags);

/// e stacks target - output with index m * C + c; J = de / dchi.
struct ResidualJacobian {
  Eigen::VectorXd e;
  Eigen::MatrixXd J;
};

ResidualJacobian residuals_and_jacobian(const NarParams& params, const LaggedWindows& windows);
Eigen::VectorXd residuals(const NarParams& params, const LaggedWindows& windows);

/// chi - (J^T J + mu I)^{-1} J^T e, solved by Cholesky.
Eigen::VectorXd lm_step(const Eigen::VectorXd& chi, const Eigen::VectorXd& e, const Eigen::MatrixXd& J, double mu);
NarParams lm_step(const NarParams& params, const Eigen::VectorXd& e, const Eigen::MatrixXd& J, double mu);

enum class LmStop { MaxIterations, MuLimit, Converged, ZeroError };

std::string to_string(LmStop reason);

struct NarTrainResult {
  NarParams params;
  std::vector<double> sse;      // SSE after each iteration
  std::vector<bool> accepted;   // whether that iteration's step was kept
  std::vector<double> mu;       // damping used by that iteration
  LmStop stop = LmStop::MaxIterations;
};

NarTrainResult train_lm(const LaggedWindows& windows, const NarConfig& cfg);
NarTrainResult train_lm(const LaggedWindows& windows, const NarConfig& cfg, NarParams start);

/// Stacks several window sets (e.g. the segments around a held-out fold).
LaggedWindows concat(const std::vector<LaggedWindows>& parts);

/// For each t >= p, forecasts observed(:, t) from the observed lags.
/// Output is C x (T - p); column j forecasts time p + j.
Eigen::MatrixXd nar_predict_updating(const NarParams& params, const Eigen::MatrixXd& observed);

/// Free-running rollout from `history` (C x p, oldest first), feeding back its own forecasts.
Eigen::MatrixXd nar_predict_closed_loop(const NarParams& params, const Eigen::MatrixXd& history, Eigen::Index steps);

}  // namespace beamcast
