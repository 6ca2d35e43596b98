#pragma once

// Data pipeline between the beamformer and the forecasters: complex signal to
// real channels, standardization with stored statistics, chronological splits,
// one-step-shifted supervised pairs, RMSE and contiguous k-fold partitions.

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace beamcast {

struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

/// C x T real channels. For channelized complex signals C = 2 (re, im).
struct Series {
  Eigen::MatrixXd channels;
  StandardizationStats stats;
  bool standardized = false;

  Eigen::Index num_channels() const { return channels.rows(); }
  Eigen::Index length() const { return channels.cols(); }
};

enum class ConstantChannelPolicy {
  Reject,     // throw ConstantChannel
  UnitScale,  // keep std = 1, only remove the mean
};

Series channelize(const Eigen::VectorXcd& signal);
Eigen::VectorXcd recombine(const Series& s);

/// Population statistics of each channel.
StandardizationStats fit_standardization(const Eigen::MatrixXd& channels,
                                         ConstantChannelPolicy policy = ConstantChannelPolicy::Reject);

Series standardize(const Series& s, ConstantChannelPolicy policy = ConstantChannelPolicy::Reject);

/// Transforms `s` with statistics fitted elsewhere (the training split).
Series apply_standardization(const Series& s, const StandardizationStats& stats);

Series destandardize(const Series& s);

Series slice(const Series& s, Eigen::Index begin, Eigen::Index end);

/// First floor(fraction * T) steps train, the rest test. No shuffling.
std::pair<Series, Series> split_train_test(const Series& s, double train_fraction);

/// inputs[:, t] = x[t], targets[:, t] = x[t + 1].
struct SupervisedWindows {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;

  Eigen::Index size() const { return inputs.cols(); }
};

SupervisedWindows make_supervised(const Eigen::MatrixXd& channels);
inline SupervisedWindows make_supervised(const Series& s) { return make_supervised(s.channels); }

/// Tapped-delay-line windows: column m of `lags` stacks y(t-1), ..., y(t-p)
/// (each a C-vector), and targets(:, m) = y(t) with t = target_index[m].
struct LaggedWindows {
  Eigen::MatrixXd lags;
  Eigen::MatrixXd targets;
  std::vector<Eigen::Index> target_index;
  int delays = 0;

  Eigen::Index size() const { return targets.cols(); }
};

LaggedWindows make_lagged(const Eigen::MatrixXd& channels, int delays, Eigen::Index first_target = -1);

/// sqrt(mean((pred - actual)^2)) over all cells.
double rmse(const Eigen::Ref<const Eigen::MatrixXd>& predicted, const Eigen::Ref<const Eigen::MatrixXd>& actual);

/// rmse divided by the population std of `actual` over all cells.
double normalized_rmse(const Eigen::Ref<const Eigen::MatrixXd>& predicted,
                       const Eigen::Ref<const Eigen::MatrixXd>& actual);

struct Fold {
  int index = 0;
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> validation;
};

/// k contiguous validation blocks; the first T % k blocks hold one extra index.
/// The seed only permutes the order in which folds are returned.
std::vector<Fold> kfold_partitions(Eigen::Index length, int k, std::uint64_t seed);

}  // namespace beamcast
