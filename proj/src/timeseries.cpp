#include "beamcast/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "beamcast/error.hpp"

namespace beamcast {

namespace {
constexpr double kMinStd = 1e-12;
}

Series channelize(const Eigen::VectorXcd& signal) {
  if (signal.size() < 2) throw Error(Errc::TooShort, "channelize needs at least 2 samples");
  Series s;
  s.channels.resize(2, signal.size());
  s.channels.row(0) = signal.real().transpose();
  s.channels.row(1) = signal.imag().transpose();
  s.stats.mean = Eigen::VectorXd::Zero(2);
  s.stats.std = Eigen::VectorXd::Ones(2);
  return s;
}

Eigen::VectorXcd recombine(const Series& s) {
  if (s.num_channels() != 2) throw Error(Errc::ShapeMismatch, "recombine expects exactly 2 channels");
  Eigen::VectorXcd out(s.length());
  out.real() = s.channels.row(0).transpose();
  out.imag() = s.channels.row(1).transpose();
  return out;
}

StandardizationStats fit_standardization(const Eigen::MatrixXd& channels, ConstantChannelPolicy policy) {
  if (channels.cols() == 0) throw Error(Errc::EmptyInput, "cannot standardize an empty series");
  StandardizationStats st;
  st.mean = channels.rowwise().mean();
  st.std.resize(channels.rows());
  for (Eigen::Index c = 0; c < channels.rows(); ++c) {
    const double sd = std::sqrt((channels.row(c).array() - st.mean(c)).square().mean());
    if (!(sd > kMinStd)) {
      if (policy == ConstantChannelPolicy::Reject)
        throw Error(Errc::ConstantChannel, "channel " + std::to_string(c) + " is constant");
      st.std(c) = 1.0;
    } else {
      st.std(c) = sd;
    }
  }
  return st;
}

Series apply_standardization(const Series& s, const StandardizationStats& stats) {
  if (stats.mean.size() != s.num_channels() || stats.std.size() != s.num_channels())
    throw Error(Errc::ShapeMismatch, "statistics do not match the channel count");
  Series out;
  out.channels = (s.channels.colwise() - stats.mean).array().colwise() / stats.std.array();
  out.stats = stats;
  out.standardized = true;
  return out;
}

Series standardize(const Series& s, ConstantChannelPolicy policy) {
  return apply_standardization(s, fit_standardization(s.channels, policy));
}

Series destandardize(const Series& s) {
  if (!s.standardized) return s;
  Series out;
  out.channels = (s.channels.array().colwise() * s.stats.std.array()).matrix().colwise() + s.stats.mean;
  out.stats.mean = Eigen::VectorXd::Zero(s.num_channels());
  out.stats.std = Eigen::VectorXd::Ones(s.num_channels());
  return out;
}

Series slice(const Series& s, Eigen::Index begin, Eigen::Index end) {
  if (begin < 0 || end > s.length() || begin > end) throw Error(Errc::LengthMismatch, "slice out of range");
  Series out = s;
  out.channels = s.channels.middleCols(begin, end - begin);
  return out;
}

std::pair<Series, Series> split_train_test(const Series& s, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(Errc::DegenerateSplit, "train fraction must lie in (0, 1)");
  const auto n_train = static_cast<Eigen::Index>(std::floor(train_fraction * static_cast<double>(s.length())));
  if (n_train < 2 || s.length() - n_train < 2)
    throw Error(Errc::DegenerateSplit, "both sides of the split need at least 2 steps (train " +
                                           std::to_string(n_train) + ", test " +
                                           std::to_string(s.length() - n_train) + ")");
  return {slice(s, 0, n_train), slice(s, n_train, s.length())};
}

SupervisedWindows make_supervised(const Eigen::MatrixXd& channels) {
  if (channels.cols() < 2) throw Error(Errc::TooShort, "supervised windows need at least 2 steps");
  const Eigen::Index m = channels.cols() - 1;
  return {channels.leftCols(m), channels.rightCols(m)};
}

LaggedWindows make_lagged(const Eigen::MatrixXd& channels, int delays, Eigen::Index first_target) {
  if (delays < 1) throw Error(Errc::WrongLagCount, "at least one delay is required");
  if (first_target < 0) first_target = delays;
  if (first_target < delays) throw Error(Errc::WrongLagCount, "first target must have a full set of lags");
  const Eigen::Index c = channels.rows();
  const Eigen::Index t_end = channels.cols();
  if (t_end <= first_target) throw Error(Errc::TooShort, "series too short for the requested delays");

  LaggedWindows w;
  w.delays = delays;
  const Eigen::Index m = t_end - first_target;
  w.lags.resize(c * delays, m);
  w.targets.resize(c, m);
  w.target_index.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index t = first_target + j;
    for (int d = 1; d <= delays; ++d) w.lags.block(c * (d - 1), j, c, 1) = channels.col(t - d);
    w.targets.col(j) = channels.col(t);
    w.target_index[static_cast<std::size_t>(j)] = t;
  }
  return w;
}

double rmse(const Eigen::Ref<const Eigen::MatrixXd>& predicted, const Eigen::Ref<const Eigen::MatrixXd>& actual) {
  if (predicted.rows() != actual.rows() || predicted.cols() != actual.cols())
    throw Error(Errc::LengthMismatch, "predicted and actual shapes differ");
  if (predicted.size() == 0) throw Error(Errc::EmptyInput, "rmse of empty sequences");
  return std::sqrt((predicted - actual).squaredNorm() / static_cast<double>(predicted.size()));
}

double normalized_rmse(const Eigen::Ref<const Eigen::MatrixXd>& predicted,
                       const Eigen::Ref<const Eigen::MatrixXd>& actual) {
  const double e = rmse(predicted, actual);
  const double sd = std::sqrt((actual.array() - actual.mean()).square().mean());
  if (!(sd > kMinStd)) throw Error(Errc::ConstantChannel, "normalized rmse of a constant target");
  return e / sd;
}

std::vector<Fold> kfold_partitions(Eigen::Index length, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidK, "k must be at least 2");
  if (length < k) throw Error(Errc::InvalidK, "k = " + std::to_string(k) + " exceeds length " + std::to_string(length));

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const Eigen::Index base = length / k;
  const Eigen::Index extra = length % k;
  Eigen::Index begin = 0;
  for (int f = 0; f < k; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    Fold& fold = folds[static_cast<std::size_t>(f)];
    fold.index = f;
    for (Eigen::Index t = 0; t < length; ++t)
      (t >= begin && t < begin + size ? fold.validation : fold.train).push_back(t);
    begin += size;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(folds.begin(), folds.end(), rng);
  return folds;
}

}  // namespace beamcast
