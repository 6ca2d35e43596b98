#include "beamcast/nar.hpp"

#include <cmath>
#include <random>

#include "beamcast/error.hpp"

namespace beamcast {

namespace {

struct Layout {
  Eigen::Index w1_rows, w1_cols, b1, w2_rows, w2_cols, b2;
  Eigen::Index off_b1() const { return w1_rows * w1_cols; }
  Eigen::Index off_w2() const { return off_b1() + b1; }
  Eigen::Index off_b2() const { return off_w2() + w2_rows * w2_cols; }
  Eigen::Index total() const { return off_b2() + b2; }
};

// With no hidden layer, "layer 1" is the linear map straight to the outputs.
Layout layout(int delays, int hidden, int channels) {
  const Eigen::Index in = Eigen::Index(delays) * channels;
  if (hidden == 0) return {channels, in, channels, 0, 0, 0};
  return {hidden, in, hidden, channels, hidden, channels};
}

Layout layout(const NarParams& p) { return layout(p.delays, p.hidden, p.channels); }

void check_lags(const NarParams& p, Eigen::Index rows) {
  if (rows != p.input_width())
    throw Error(Errc::WrongLagCount, "expected " + std::to_string(p.delays) + " lags of " +
                                         std::to_string(p.channels) + " channels, got " + std::to_string(rows) +
                                         " values");
}

Eigen::ArrayXXd activate(const NarParams& p, const Eigen::MatrixXd& a) {
  return p.activation == NarActivation::Tanh ? a.array().tanh().eval() : a.array().eval();
}

}  // namespace

void NarConfig::validate() const {
  if (delays < 1) throw Error(Errc::InvalidConfig, "delays must be >= 1");
  if (hidden_neurons < 0) throw Error(Errc::InvalidConfig, "hidden_neurons must be >= 0");
  if (!(mu_init > 0)) throw Error(Errc::InvalidConfig, "mu_init must be positive");
  if (!(mu_increase > 1)) throw Error(Errc::InvalidConfig, "mu_increase must exceed 1");
  if (!(mu_decrease > 0 && mu_decrease < 1)) throw Error(Errc::InvalidConfig, "mu_decrease must lie in (0, 1)");
  if (max_iterations < 1) throw Error(Errc::InvalidConfig, "max_iterations must be >= 1");
}

Eigen::Index NarParams::parameter_count(int delays, int hidden, int channels) {
  return layout(delays, hidden, channels).total();
}

NarParams NarParams::zeros(int delays, int hidden, int channels, NarActivation act) {
  if (delays < 1 || hidden < 0 || channels < 1) throw Error(Errc::InvalidConfig, "invalid NAR network shape");
  NarParams p;
  p.delays = delays;
  p.hidden = hidden;
  p.channels = channels;
  p.activation = act;
  p.chi = Eigen::VectorXd::Zero(parameter_count(delays, hidden, channels));
  return p;
}

NarParams NarParams::initialize(int delays, int hidden, int channels, std::uint64_t seed, NarActivation act) {
  NarParams p = zeros(delays, hidden, channels, act);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Eigen::Index k = 0; k < p.chi.size(); ++k) p.chi(k) = u(rng);
  return p;
}

Eigen::Map<const Eigen::MatrixXd> NarParams::w1() const {
  const auto l = layout(*this);
  return {chi.data(), l.w1_rows, l.w1_cols};
}
Eigen::Map<const Eigen::VectorXd> NarParams::b1() const {
  const auto l = layout(*this);
  return {chi.data() + l.off_b1(), l.b1};
}
Eigen::Map<const Eigen::MatrixXd> NarParams::w2() const {
  const auto l = layout(*this);
  return {chi.data() + l.off_w2(), l.w2_rows, l.w2_cols};
}
Eigen::Map<const Eigen::VectorXd> NarParams::b2() const {
  const auto l = layout(*this);
  return {chi.data() + l.off_b2(), l.b2};
}
Eigen::Map<Eigen::MatrixXd> NarParams::w1() {
  const auto l = layout(*this);
  return {chi.data(), l.w1_rows, l.w1_cols};
}
Eigen::Map<Eigen::VectorXd> NarParams::b1() {
  const auto l = layout(*this);
  return {chi.data() + l.off_b1(), l.b1};
}
Eigen::Map<Eigen::MatrixXd> NarParams::w2() {
  const auto l = layout(*this);
  return {chi.data() + l.off_w2(), l.w2_rows, l.w2_cols};
}
Eigen::Map<Eigen::VectorXd> NarParams::b2() {
  const auto l = layout(*this);
  return {chi.data() + l.off_b2(), l.b2};
}

Eigen::MatrixXd nar_forward_batch(const NarParams& p, const Eigen::MatrixXd& lags) {
  check_lags(p, lags.rows());
  const Eigen::MatrixXd a = (p.w1() * lags).colwise() + p.b1();
  if (p.hidden == 0) return a;
  const Eigen::MatrixXd z = activate(p, a).matrix();
  return (p.w2() * z).colwise() + p.b2();
}

Eigen::VectorXd nar_forward(const NarParams& p, const Eigen::VectorXd& lags) {
  return nar_forward_batch(p, lags);
}

Eigen::VectorXd residuals(const NarParams& p, const LaggedWindows& w) {
  if (w.targets.rows() != p.channels) throw Error(Errc::ShapeMismatch, "target channels do not match the network");
  const Eigen::MatrixXd err = w.targets - nar_forward_batch(p, w.lags);
  return Eigen::Map<const Eigen::VectorXd>(err.data(), err.size());
}

ResidualJacobian residuals_and_jacobian(const NarParams& p, const LaggedWindows& w) {
  if (w.size() < 1) throw Error(Errc::TooShort, "at least one window is required");
  if (w.targets.rows() != p.channels) throw Error(Errc::ShapeMismatch, "target channels do not match the network");
  check_lags(p, w.lags.rows());

  const Eigen::Index M = w.size();
  const Eigen::Index C = p.channels;
  const Eigen::Index in = p.input_width();
  const auto l = layout(p);

  ResidualJacobian out;
  out.J = Eigen::MatrixXd::Zero(M * C, l.total());

  if (p.hidden == 0) {
    const Eigen::MatrixXd y = (p.w1() * w.lags).colwise() + p.b1();
    const Eigen::MatrixXd err = w.targets - y;
    out.e = Eigen::Map<const Eigen::VectorXd>(err.data(), err.size());
    for (Eigen::Index m = 0; m < M; ++m)
      for (Eigen::Index c = 0; c < C; ++c) {
        const Eigen::Index row = m * C + c;
        for (Eigen::Index k = 0; k < in; ++k) out.J(row, c + k * C) = -w.lags(k, m);
        out.J(row, l.off_b1() + c) = -1.0;
      }
    return out;
  }

  const Eigen::Index Hn = p.hidden;
  const Eigen::MatrixXd a = (p.w1() * w.lags).colwise() + p.b1();
  const Eigen::ArrayXXd z = activate(p, a);
  const Eigen::ArrayXXd dz = p.activation == NarActivation::Tanh ? (1.0 - z.square()).eval()
                                                                 : Eigen::ArrayXXd::Ones(Hn, M).eval();
  const Eigen::MatrixXd y = (p.w2() * z.matrix()).colwise() + p.b2();
  const Eigen::MatrixXd err = w.targets - y;
  out.e = Eigen::Map<const Eigen::VectorXd>(err.data(), err.size());

  const auto w2 = p.w2();
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index c = 0; c < C; ++c) {
      const Eigen::Index row = m * C + c;
      // de/dchi = -dy/dchi.
      for (Eigen::Index j = 0; j < Hn; ++j) {
        const double back = -w2(c, j) * dz(j, m);
        for (Eigen::Index k = 0; k < in; ++k) out.J(row, j + k * Hn) = back * w.lags(k, m);
        out.J(row, l.off_b1() + j) = back;
        out.J(row, l.off_w2() + c + j * C) = -z(j, m);
      }
      out.J(row, l.off_b2() + c) = -1.0;
    }
  }
  return out;
}

Eigen::VectorXd lm_step(const Eigen::VectorXd& chi, const Eigen::VectorXd& e, const Eigen::MatrixXd& J, double mu) {
  if (J.cols() != chi.size() || J.rows() != e.size())
    throw Error(Errc::ShapeMismatch, "Jacobian shape does not match residuals and parameters");
  if (!(mu >= 0)) throw Error(Errc::InvalidConfig, "damping must be nonnegative");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(chi.size(), chi.size());
  A.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
  A.diagonal().array() += mu;
  Eigen::LLT<Eigen::MatrixXd> llt;
  llt.compute(A.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) throw Error(Errc::IllConditioned, "J^T J + mu I is not positive definite");
  const Eigen::VectorXd delta = llt.solve(J.transpose() * e);
  if (!delta.allFinite()) throw Error(Errc::IllConditioned, "damped normal equations produced a non-finite step");
  return chi - delta;
}

NarParams lm_step(const NarParams& params, const Eigen::VectorXd& e, const Eigen::MatrixXd& J, double mu) {
  NarParams out = params;
  out.chi = lm_step(params.chi, e, J, mu);
  return out;
}

std::string to_string(LmStop reason) {
  switch (reason) {
    case LmStop::MaxIterations: return "max_iterations";
    case LmStop::MuLimit: return "mu_limit";
    case LmStop::Converged: return "converged";
    case LmStop::ZeroError: return "zero_error";
  }
  return "unknown";
}

NarTrainResult train_lm(const LaggedWindows& windows, const NarConfig& cfg, NarParams params) {
  cfg.validate();
  if (windows.size() < 1) throw Error(Errc::TooShort, "no training windows");

  NarTrainResult r;
  ResidualJacobian current = residuals_and_jacobian(params, windows);
  double sse = current.e.squaredNorm();
  if (!std::isfinite(sse)) throw Error(Errc::Divergence, "initial SSE is not finite");
  double mu = cfg.mu_init;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (sse == 0.0) {
      r.stop = LmStop::ZeroError;
      break;
    }
    r.mu.push_back(mu);
    bool accept = false;
    NarParams candidate;
    double candidate_sse = 0.0;
    try {
      candidate = lm_step(params, current.e, current.J, mu);
      candidate_sse = residuals(candidate, windows).squaredNorm();
      accept = std::isfinite(candidate_sse) && candidate_sse < sse;
    } catch (const Error& err) {
      if (err.code() != Errc::IllConditioned) throw;
    }

    if (accept) {
      const double rel = (sse - candidate_sse) / sse;
      params = std::move(candidate);
      sse = candidate_sse;
      current = residuals_and_jacobian(params, windows);
      mu = std::max(mu * cfg.mu_decrease, cfg.mu_min);
      r.sse.push_back(sse);
      r.accepted.push_back(true);
      if (rel < cfg.min_relative_change) {
        r.stop = LmStop::Converged;
        break;
      }
    } else {
      mu *= cfg.mu_increase;
      r.sse.push_back(sse);
      r.accepted.push_back(false);
      if (mu > cfg.mu_max) {
        r.stop = LmStop::MuLimit;
        break;
      }
    }
  }
  if (!std::isfinite(sse)) throw Error(Errc::Divergence, "SSE became non-finite");
  r.params = std::move(params);
  return r;
}

NarTrainResult train_lm(const LaggedWindows& windows, const NarConfig& cfg) {
  cfg.validate();
  const auto channels = static_cast<int>(windows.targets.rows());
  return train_lm(windows, cfg,
                  NarParams::initialize(cfg.delays, cfg.hidden_neurons, channels, cfg.seed, cfg.activation));
}

LaggedWindows concat(const std::vector<LaggedWindows>& parts) {
  LaggedWindows out;
  Eigen::Index total = 0;
  Eigen::Index rows = -1, channels = -1;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    if (rows >= 0 && (p.lags.rows() != rows || p.targets.rows() != channels))
      throw Error(Errc::ShapeMismatch, "window sets have different shapes");
    rows = p.lags.rows();
    channels = p.targets.rows();
    out.delays = p.delays;
    total += p.size();
  }
  if (total == 0) return out;
  out.lags.resize(rows, total);
  out.targets.resize(channels, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    out.lags.middleCols(at, p.size()) = p.lags;
    out.targets.middleCols(at, p.size()) = p.targets;
    out.target_index.insert(out.target_index.end(), p.target_index.begin(), p.target_index.end());
    at += p.size();
  }
  return out;
}

Eigen::MatrixXd nar_predict_updating(const NarParams& p, const Eigen::MatrixXd& observed) {
  if (observed.cols() <= p.delays) throw Error(Errc::TooShort, "need more than p observations");
  if (observed.rows() != p.channels) throw Error(Errc::ShapeMismatch, "observed channels do not match the network");
  return nar_forward_batch(p, make_lagged(observed, p.delays).lags);
}

Eigen::MatrixXd nar_predict_closed_loop(const NarParams& p, const Eigen::MatrixXd& history, Eigen::Index steps) {
  if (history.rows() != p.channels || history.cols() < p.delays)
    throw Error(Errc::WrongLagCount, "history must hold p columns of C channels");
  const Eigen::Index C = p.channels;
  Eigen::MatrixXd buffer(C, p.delays + steps);
  buffer.leftCols(p.delays) = history.rightCols(p.delays);
  Eigen::VectorXd lags(p.input_width());
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = p.delays + s;
    for (int d = 1; d <= p.delays; ++d) lags.segment(C * (d - 1), C) = buffer.col(t - d);
    buffer.col(t) = nar_forward(p, lags);
  }
  return buffer.rightCols(steps);
}

}  // namespace beamcast
