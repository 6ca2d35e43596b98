#pragma once

// Single-layer LSTM with a dense head for one-step-ahead regression, trained
// by full-sequence backpropagation through time and Adam.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/timeseries.hpp"

namespace beamcast {

/// Gate weights act on the input (wx_*, H x C) and on the previous output
/// (wh_*, H x H). Biases are H x 1 and the head maps h to C outputs.
struct LstmParams {
  int input_size = 0;   // C
  int hidden_size = 0;  // H

  Eigen::MatrixXd wx_f, wx_i, wx_o, wx_c;
  Eigen::MatrixXd wh_f, wh_i, wh_o, wh_c;
  Eigen::MatrixXd b_f, b_i, b_o, b_c;
  Eigen::MatrixXd w_out;
  Eigen::MatrixXd b_out;

  static constexpr std::size_t kNumTensors = 14;

  static LstmParams zeros(int input_size, int hidden_size);
  /// uniform(-1/sqrt(H), 1/sqrt(H)) matrices, forget bias 1, other biases 0.
  static LstmParams initialize(int input_size, int hidden_size, std::uint64_t seed);

  /// Tensors in declaration order; serialization and optimizers rely on it.
  std::array<Eigen::MatrixXd*, kNumTensors> tensors();
  std::array<const Eigen::MatrixXd*, kNumTensors> tensors() const;

  Eigen::Index num_parameters() const;
  bool all_finite() const;
  bool same_shape(const LstmParams& other) const;
  /// FNV-1a over every parameter value.
  std::uint64_t fingerprint() const;
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmState zeros(int hidden_size);
};

/// Gate activations of one step, kept for inspection and tests.
struct LstmGates {
  Eigen::VectorXd forget, input, output, candidate;
};

LstmState cell_step(const LstmParams& p, const Eigen::VectorXd& x, const LstmState& prev, LstmGates* gates = nullptr);

/// Everything backward() needs from a forward pass. Column t of the H x (T+1)
/// matrices h/c holds the state after step t-1 (column 0 is the initial state).
struct LstmCache {
  std::uint64_t param_fingerprint = 0;
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd forget, input, output, candidate;
  Eigen::MatrixXd h, c;
  Eigen::MatrixXd tanh_c;
  Eigen::MatrixXd head_input;  // h after dropout scaling, fed to the dense head
  Eigen::MatrixXd dropout_scale;
  Eigen::MatrixXd predictions;
};

struct LstmForward {
  Eigen::MatrixXd predictions;  // C x T, prediction[:, t] = w_out h_t + b_out
  LstmState final_state;
  LstmCache cache;
};

LstmForward forward(const LstmParams& p, const Eigen::MatrixXd& inputs, const LstmState& initial);

/// Mean squared error over all C x T cells.
double sequence_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets);

/// Exact gradient of sequence_loss(forward(p, ...).predictions, targets).
LstmParams backward(const LstmParams& p, const LstmCache& cache, const Eigen::MatrixXd& targets);

struct LstmTrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 0;
  double grad_clip = 1.0;
  int hidden_size = 64;
  double dropout = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct LstmTrainResult {
  LstmParams params;
  std::vector<double> loss_curve;  // loss before each epoch's update
};

/// Each window set is an independent sequence starting from the zero state;
/// the loss is the mean over every cell of every sequence.
LstmTrainResult train_lstm(std::span<const SupervisedWindows> sequences, const LstmTrainConfig& cfg);
LstmTrainResult train_lstm(const SupervisedWindows& windows, const LstmTrainConfig& cfg);

/// Continues training from existing parameters (fresh optimizer state).
LstmTrainResult train_lstm(std::span<const SupervisedWindows> sequences, const LstmTrainConfig& cfg,
                           LstmParams start);

struct LstmRollout {
  Eigen::MatrixXd predictions;
  LstmState final_state;
};

/// Teacher-forced rollout: the state advances on each observed column and
/// predictions[:, t] forecasts observed[:, t + 1].
LstmRollout predict_updating(const LstmParams& p, const Eigen::MatrixXd& observed, const LstmState& initial);
LstmRollout predict_updating(const LstmParams& p, const Eigen::MatrixXd& observed);

/// Free-running rollout: starting from `state`, consumes `first_input` and then
/// each of its own predictions. Returns `steps` predictions.
Eigen::MatrixXd predict_closed_loop(const LstmParams& p, const LstmState& state, const Eigen::VectorXd& first_input,
                                    Eigen::Index steps);

}  // namespace beamcast
