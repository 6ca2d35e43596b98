#include "beamcast/lstm.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "beamcast/error.hpp"

namespace beamcast {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

void check_input_shape(const LstmParams& p, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != p.input_size)
    throw Error(Errc::ShapeMismatch, "input has " + std::to_string(inputs.rows()) + " channels, network expects " +
                                         std::to_string(p.input_size));
}

void check_state_shape(const LstmParams& p, const LstmState& s) {
  if (s.h.size() != p.hidden_size || s.c.size() != p.hidden_size)
    throw Error(Errc::ShapeMismatch, "state size does not match hidden size " + std::to_string(p.hidden_size));
}

}  // namespace

LstmParams LstmParams::zeros(int input_size, int hidden_size) {
  if (input_size < 1 || hidden_size < 1) throw Error(Errc::InvalidConfig, "LSTM sizes must be positive");
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  for (auto* w : {&p.wx_f, &p.wx_i, &p.wx_o, &p.wx_c}) w->setZero(hidden_size, input_size);
  for (auto* w : {&p.wh_f, &p.wh_i, &p.wh_o, &p.wh_c}) w->setZero(hidden_size, hidden_size);
  for (auto* b : {&p.b_f, &p.b_i, &p.b_o, &p.b_c}) b->setZero(hidden_size, 1);
  p.w_out.setZero(input_size, hidden_size);
  p.b_out.setZero(input_size, 1);
  return p;
}

LstmParams LstmParams::initialize(int input_size, int hidden_size, std::uint64_t seed) {
  LstmParams p = zeros(input_size, hidden_size);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto* w : {&p.wx_f, &p.wx_i, &p.wx_o, &p.wx_c, &p.wh_f, &p.wh_i, &p.wh_o, &p.wh_c, &p.w_out})
    for (Eigen::Index j = 0; j < w->cols(); ++j)
      for (Eigen::Index i = 0; i < w->rows(); ++i) (*w)(i, j) = u(rng);
  p.b_f.setOnes();
  return p;
}

std::array<Eigen::MatrixXd*, LstmParams::kNumTensors> LstmParams::tensors() {
  return {&wx_f, &wx_i, &wx_o, &wx_c, &wh_f, &wh_i, &wh_o, &wh_c, &b_f, &b_i, &b_o, &b_c, &w_out, &b_out};
}

std::array<const Eigen::MatrixXd*, LstmParams::kNumTensors> LstmParams::tensors() const {
  return {&wx_f, &wx_i, &wx_o, &wx_c, &wh_f, &wh_i, &wh_o, &wh_c, &b_f, &b_i, &b_o, &b_c, &w_out, &b_out};
}

Eigen::Index LstmParams::num_parameters() const {
  Eigen::Index n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

bool LstmParams::all_finite() const {
  for (const auto* t : tensors())
    if (!t->allFinite()) return false;
  return true;
}

bool LstmParams::same_shape(const LstmParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t k = 0; k < kNumTensors; ++k)
    if (a[k]->rows() != b[k]->rows() || a[k]->cols() != b[k]->cols()) return false;
  return true;
}

std::uint64_t LstmParams::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* t : tensors()) {
    for (Eigen::Index k = 0; k < t->size(); ++k) {
      std::uint64_t bits;
      const double v = t->data()[k];
      std::memcpy(&bits, &v, sizeof bits);
      h = (h ^ bits) * 1099511628211ULL;
    }
  }
  return h;
}

LstmState LstmState::zeros(int hidden_size) {
  return {Eigen::VectorXd::Zero(hidden_size), Eigen::VectorXd::Zero(hidden_size)};
}

LstmState cell_step(const LstmParams& p, const Eigen::VectorXd& x, const LstmState& prev, LstmGates* gates) {
  if (x.size() != p.input_size) throw Error(Errc::ShapeMismatch, "input size does not match the network");
  check_state_shape(p, prev);

  const Eigen::VectorXd f = sigmoid(p.wx_f * x + p.wh_f * prev.h + p.b_f);
  const Eigen::VectorXd i = sigmoid(p.wx_i * x + p.wh_i * prev.h + p.b_i);
  const Eigen::VectorXd o = sigmoid(p.wx_o * x + p.wh_o * prev.h + p.b_o);
  const Eigen::VectorXd g = (p.wx_c * x + p.wh_c * prev.h + p.b_c).array().tanh().matrix();

  LstmState next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  next.h = o.cwiseProduct(next.c.array().tanh().matrix());
  if (gates) *gates = {f, i, o, g};
  return next;
}

namespace {

// dropout_scale, when non-empty, is H x T: 0 for dropped units, 1/(1-rate) otherwise.
LstmForward forward_impl(const LstmParams& p, const Eigen::MatrixXd& inputs, const LstmState& initial,
                         Eigen::MatrixXd dropout_scale) {
  check_input_shape(p, inputs);
  check_state_shape(p, initial);
  const Eigen::Index T = inputs.cols();
  if (T == 0) throw Error(Errc::EmptyInput, "forward needs a non-empty sequence");
  const Eigen::Index H = p.hidden_size;

  LstmForward out;
  LstmCache& k = out.cache;
  k.param_fingerprint = p.fingerprint();
  k.inputs = inputs;
  // Input projections for the whole sequence at once.
  const Eigen::MatrixXd px_f = (p.wx_f * inputs).colwise() + p.b_f.col(0);
  const Eigen::MatrixXd px_i = (p.wx_i * inputs).colwise() + p.b_i.col(0);
  const Eigen::MatrixXd px_o = (p.wx_o * inputs).colwise() + p.b_o.col(0);
  const Eigen::MatrixXd px_c = (p.wx_c * inputs).colwise() + p.b_c.col(0);

  k.forget.resize(H, T);
  k.input.resize(H, T);
  k.output.resize(H, T);
  k.candidate.resize(H, T);
  k.tanh_c.resize(H, T);
  k.h.resize(H, T + 1);
  k.c.resize(H, T + 1);
  k.h.col(0) = initial.h;
  k.c.col(0) = initial.c;

  for (Eigen::Index t = 0; t < T; ++t) {
    const auto h_prev = k.h.col(t);
    k.forget.col(t) = sigmoid(px_f.col(t) + p.wh_f * h_prev);
    k.input.col(t) = sigmoid(px_i.col(t) + p.wh_i * h_prev);
    k.output.col(t) = sigmoid(px_o.col(t) + p.wh_o * h_prev);
    k.candidate.col(t) = (px_c.col(t) + p.wh_c * h_prev).array().tanh().matrix();
    k.c.col(t + 1) = k.forget.col(t).cwiseProduct(k.c.col(t)) + k.input.col(t).cwiseProduct(k.candidate.col(t));
    k.tanh_c.col(t) = k.c.col(t + 1).array().tanh().matrix();
    k.h.col(t + 1) = k.output.col(t).cwiseProduct(k.tanh_c.col(t));
  }

  k.head_input = k.h.rightCols(T);
  if (dropout_scale.size() != 0) k.head_input.array() *= dropout_scale.array();
  k.dropout_scale = std::move(dropout_scale);
  k.predictions = (p.w_out * k.head_input).colwise() + p.b_out.col(0);

  out.predictions = k.predictions;
  out.final_state = {k.h.col(T), k.c.col(T)};
  return out;
}

}  // namespace

LstmForward forward(const LstmParams& p, const Eigen::MatrixXd& inputs, const LstmState& initial) {
  return forward_impl(p, inputs, initial, Eigen::MatrixXd());
}

double sequence_loss(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw Error(Errc::ShapeMismatch, "prediction and target shapes differ");
  return (predictions - targets).squaredNorm() / static_cast<double>(targets.size());
}

LstmParams backward(const LstmParams& p, const LstmCache& k, const Eigen::MatrixXd& targets) {
  if (k.param_fingerprint != p.fingerprint())
    throw Error(Errc::StaleCache, "cache was produced with different parameters");
  if (targets.rows() != k.predictions.rows() || targets.cols() != k.predictions.cols())
    throw Error(Errc::StaleCache, "targets do not match the cached forward pass");

  const Eigen::Index T = targets.cols();
  const Eigen::Index H = p.hidden_size;
  LstmParams g = LstmParams::zeros(p.input_size, p.hidden_size);

  const Eigen::MatrixXd d_pred = (2.0 / static_cast<double>(targets.size())) * (k.predictions - targets);
  g.w_out = d_pred * k.head_input.transpose();
  g.b_out = d_pred.rowwise().sum();
  Eigen::MatrixXd d_h_head = p.w_out.transpose() * d_pred;
  if (k.dropout_scale.size() != 0) d_h_head.array() *= k.dropout_scale.array();

  Eigen::MatrixXd da_f(H, T), da_i(H, T), da_o(H, T), da_c(H, T);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Eigen::ArrayXd dh = (d_h_head.col(t) + dh_next).array();
    const Eigen::ArrayXd f = k.forget.col(t).array();
    const Eigen::ArrayXd i = k.input.col(t).array();
    const Eigen::ArrayXd o = k.output.col(t).array();
    const Eigen::ArrayXd cand = k.candidate.col(t).array();
    const Eigen::ArrayXd tc = k.tanh_c.col(t).array();

    const Eigen::ArrayXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
    da_o.col(t) = (dh * tc * o * (1.0 - o)).matrix();
    da_f.col(t) = (dc * k.c.col(t).array() * f * (1.0 - f)).matrix();
    da_i.col(t) = (dc * cand * i * (1.0 - i)).matrix();
    da_c.col(t) = (dc * i * (1.0 - cand.square())).matrix();

    dh_next = p.wh_f.transpose() * da_f.col(t) + p.wh_i.transpose() * da_i.col(t) +
              p.wh_o.transpose() * da_o.col(t) + p.wh_c.transpose() * da_c.col(t);
    dc_next = (dc * f).matrix();
  }

  const auto h_prev = k.h.leftCols(T);
  const std::array<const Eigen::MatrixXd*, 4> da{&da_f, &da_i, &da_o, &da_c};
  const std::array<Eigen::MatrixXd*, 4> gx{&g.wx_f, &g.wx_i, &g.wx_o, &g.wx_c};
  const std::array<Eigen::MatrixXd*, 4> gh{&g.wh_f, &g.wh_i, &g.wh_o, &g.wh_c};
  const std::array<Eigen::MatrixXd*, 4> gb{&g.b_f, &g.b_i, &g.b_o, &g.b_c};
  for (std::size_t q = 0; q < 4; ++q) {
    gx[q]->noalias() = *da[q] * k.inputs.transpose();
    gh[q]->noalias() = *da[q] * h_prev.transpose();
    *gb[q] = da[q]->rowwise().sum();
  }
  return g;
}

void LstmTrainConfig::validate() const {
  if (!(learning_rate >= 0)) throw Error(Errc::InvalidConfig, "learning_rate must be nonnegative");
  if (epochs < 1) throw Error(Errc::InvalidConfig, "epochs must be >= 1");
  if (!(grad_clip > 0)) throw Error(Errc::InvalidConfig, "grad_clip must be positive");
  if (hidden_size < 1) throw Error(Errc::InvalidConfig, "hidden_size must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw Error(Errc::InvalidConfig, "dropout must lie in [0, 1)");
}

LstmTrainResult train_lstm(std::span<const SupervisedWindows> sequences, const LstmTrainConfig& cfg,
                           LstmParams params) {
  cfg.validate();
  Eigen::Index total_cells = 0;
  for (const auto& s : sequences) {
    if (s.inputs.rows() != params.input_size || s.targets.rows() != params.input_size ||
        s.inputs.cols() != s.targets.cols())
      throw Error(Errc::ShapeMismatch, "training windows do not match the network");
    total_cells += s.targets.size();
  }
  if (total_cells == 0 || sequences.empty()) throw Error(Errc::TooShort, "no training windows");
  Eigen::Index total_windows = 0;
  for (const auto& s : sequences) total_windows += s.size();
  if (total_windows < 2) throw Error(Errc::TooShort, "training needs at least 2 windows");

  const int H = params.hidden_size;
  std::array<Eigen::MatrixXd, LstmParams::kNumTensors> m, v;
  {
    const auto ts = params.tensors();
    for (std::size_t q = 0; q < ts.size(); ++q) {
      m[q] = Eigen::MatrixXd::Zero(ts[q]->rows(), ts[q]->cols());
      v[q] = m[q];
    }
  }

  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution keep(1.0 - cfg.dropout);
  const double keep_scale = 1.0 / (1.0 - cfg.dropout);

  LstmTrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    LstmParams grad = LstmParams::zeros(params.input_size, H);
    double sse = 0.0;
    for (const auto& s : sequences) {
      if (s.size() == 0) continue;
      Eigen::MatrixXd scale;
      if (cfg.dropout > 0) {
        scale.resize(H, s.size());
        for (Eigen::Index j = 0; j < scale.size(); ++j) scale.data()[j] = keep(dropout_rng) ? keep_scale : 0.0;
      }
      const auto fw = forward_impl(params, s.inputs, LstmState::zeros(H), std::move(scale));
      sse += (fw.predictions - s.targets).squaredNorm();
      const LstmParams gs = backward(params, fw.cache, s.targets);
      // backward() returns the gradient of this sequence's mean; reweight to the global mean.
      const double w = static_cast<double>(s.targets.size()) / static_cast<double>(total_cells);
      const auto gt = grad.tensors();
      const auto st = gs.tensors();
      for (std::size_t q = 0; q < gt.size(); ++q) *gt[q] += w * *st[q];
    }
    const double loss = sse / static_cast<double>(total_cells);
    if (!std::isfinite(loss))
      throw Error(Errc::Divergence, "loss became non-finite at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(loss);

    double norm2 = 0.0;
    for (const auto* t : grad.tensors()) norm2 += t->squaredNorm();
    const double norm = std::sqrt(norm2);
    const double clip = norm > cfg.grad_clip ? cfg.grad_clip / norm : 1.0;

    const double bc1 = 1.0 - std::pow(cfg.beta1, epoch + 1);
    const double bc2 = 1.0 - std::pow(cfg.beta2, epoch + 1);
    const auto pt = params.tensors();
    const auto gt = grad.tensors();
    for (std::size_t q = 0; q < pt.size(); ++q) {
      const Eigen::MatrixXd gq = clip * *gt[q];
      m[q] = cfg.beta1 * m[q] + (1.0 - cfg.beta1) * gq;
      v[q] = cfg.beta2 * v[q] + (1.0 - cfg.beta2) * gq.cwiseAbs2();
      pt[q]->array() -= cfg.learning_rate * (m[q].array() / bc1) / ((v[q].array() / bc2).sqrt() + cfg.epsilon);
    }
    if (!params.all_finite())
      throw Error(Errc::Divergence, "parameters became non-finite at epoch " + std::to_string(epoch));
  }
  result.params = std::move(params);
  return result;
}

LstmTrainResult train_lstm(std::span<const SupervisedWindows> sequences, const LstmTrainConfig& cfg) {
  cfg.validate();
  if (sequences.empty()) throw Error(Errc::TooShort, "no training windows");
  const auto c = static_cast<int>(sequences.front().inputs.rows());
  return train_lstm(sequences, cfg, LstmParams::initialize(c, cfg.hidden_size, cfg.seed));
}

LstmTrainResult train_lstm(const SupervisedWindows& windows, const LstmTrainConfig& cfg) {
  return train_lstm(std::span<const SupervisedWindows>(&windows, 1), cfg);
}

LstmRollout predict_updating(const LstmParams& p, const Eigen::MatrixXd& observed, const LstmState& initial) {
  auto fw = forward(p, observed, initial);
  return {std::move(fw.predictions), std::move(fw.final_state)};
}

LstmRollout predict_updating(const LstmParams& p, const Eigen::MatrixXd& observed) {
  return predict_updating(p, observed, LstmState::zeros(p.hidden_size));
}

Eigen::MatrixXd predict_closed_loop(const LstmParams& p, const LstmState& state, const Eigen::VectorXd& first_input,
                                    Eigen::Index steps) {
  Eigen::MatrixXd out(p.input_size, steps);
  LstmState s = state;
  Eigen::VectorXd x = first_input;
  for (Eigen::Index t = 0; t < steps; ++t) {
    s = cell_step(p, x, s);
    x = p.w_out * s.h + p.b_out.col(0);
    out.col(t) = x;
  }
  return out;
}

}  // namespace beamcast
