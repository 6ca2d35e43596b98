#pragma once

// Finite-difference checks and synthetic data shared by the unit tests and
// the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "beamcast/lstm.hpp"
#include "beamcast/nar.hpp"

namespace checks {

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

inline beamcast::LstmParams random_lstm_params(int C, int H, std::uint64_t seed, double scale = 0.8) {
  beamcast::LstmParams p = beamcast::LstmParams::zeros(C, H);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto* t : p.tensors())
    for (Eigen::Index k = 0; k < t->size(); ++k) t->data()[k] = u(rng);
  return p;
}

// |a - b| / max(|a|, |b|, floor). Below ~1e-6 a central difference with
// eps 1e-5 is dominated by ~1e-11 roundoff, hence the floor.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest relative error between backward() and central differences of the sequence loss.
inline double lstm_gradient_error(int C, int H, Eigen::Index T, std::uint64_t seed) {
  using namespace beamcast;
  const LstmParams p = random_lstm_params(C, H, seed);
  const Eigen::MatrixXd x = random_matrix(C, T, seed + 100);
  const Eigen::MatrixXd y = random_matrix(C, T, seed + 200);
  const LstmState init{0.3 * random_matrix(H, 1, seed + 300).col(0), 0.3 * random_matrix(H, 1, seed + 400).col(0)};
  const LstmParams g = backward(p, forward(p, x, init).cache, y);
  const auto loss = [&](const LstmParams& q) { return sequence_loss(forward(q, x, init).predictions, y); };

  const double eps = 1e-5;
  double worst = 0.0;
  LstmParams probe = p;
  const auto pt = probe.tensors();
  const auto gt = g.tensors();
  for (std::size_t q = 0; q < pt.size(); ++q) {
    for (Eigen::Index k = 0; k < pt[q]->size(); ++k) {
      double& w = pt[q]->data()[k];
      const double saved = w;
      w = saved + eps;
      const double up = loss(probe);
      w = saved - eps;
      const double down = loss(probe);
      w = saved;
      worst = std::max(worst, relative_error((up - down) / (2 * eps), gt[q]->data()[k]));
    }
  }
  return worst;
}

inline beamcast::LaggedWindows random_windows(const beamcast::NarParams& p, Eigen::Index M, std::uint64_t seed) {
  beamcast::LaggedWindows w;
  w.delays = p.delays;
  w.lags = random_matrix(p.input_width(), M, seed);
  w.targets = random_matrix(p.channels, M, seed + 1);
  return w;
}

/// Largest relative error between the analytic residual Jacobian and central differences.
inline double nar_jacobian_error(const beamcast::NarParams& p, const beamcast::LaggedWindows& w) {
  using namespace beamcast;
  const auto rj = residuals_and_jacobian(p, w);
  const double eps = 1e-6;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < p.chi.size(); ++k) {
    NarParams up = p, down = p;
    up.chi(k) += eps;
    down.chi(k) -= eps;
    const Eigen::VectorXd fd = (residuals(up, w) - residuals(down, w)) / (2 * eps);
    for (Eigen::Index m = 0; m < fd.size(); ++m) worst = std::max(worst, relative_error(fd(m), rj.J(m, k)));
  }
  return worst;
}

/// Pure NAR trajectory of a known network, started from random lags.
inline Eigen::MatrixXd planted_series(const beamcast::NarParams& truth, Eigen::Index T, std::uint64_t seed) {
  Eigen::MatrixXd y(truth.channels, T);
  y.leftCols(truth.delays) = random_matrix(truth.channels, truth.delays, seed);
  Eigen::VectorXd lags(truth.input_width());
  for (Eigen::Index t = truth.delays; t < T; ++t) {
    for (int d = 1; d <= truth.delays; ++d) lags.segment(truth.channels * (d - 1), truth.channels) = y.col(t - d);
    y.col(t) = beamcast::nar_forward(truth, lags);
  }
  return y;
}

/// Network whose trajectory keeps oscillating: weights (not biases) in uniform(-1.5, 1.5).
inline beamcast::NarParams oscillating_network(int delays, int hidden, int channels, std::uint64_t seed) {
  auto p = beamcast::NarParams::initialize(delays, hidden, channels, seed);
  p.w1() *= 3.0;
  p.w2() *= 3.0;
  return p;
}

}  // namespace checks
