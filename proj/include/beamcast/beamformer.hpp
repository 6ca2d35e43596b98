#pragma once

// Covariance estimation and distortionless beamformers (Bartlett, MVDR),
// beamformed output, output SINR and beampatterns.

#include <algorithm>
#include <cmath>
#include <vector>

#include "beamcast/array_model.hpp"
#include "beamcast/error.hpp"
#include "beamcast/types.hpp"

namespace beamcast {

template <typename Scalar>
struct CovarianceMatrix {
  CMatrix<Scalar> data;
  Scalar loading = 0;

  Eigen::Index size() const { return data.rows(); }
};

template <typename Scalar>
struct BeamWeights {
  CVector<Scalar> data;

  Eigen::Index size() const { return data.size(); }
};

/// (1/T) sum_t x_t x_t^H + loading * I, with x_t the t-th snapshot.
template <typename Scalar>
CovarianceMatrix<Scalar> sample_covariance(const SnapshotMatrix<Scalar>& X, Scalar diagonal_loading) {
  if (X.num_samples() == 0) throw Error(Errc::EmptyInput, "sample covariance needs at least one snapshot");
  if (diagonal_loading < 0) throw Error(Errc::InvalidConfig, "diagonal loading must be nonnegative");
  const Eigen::Index n = X.num_elements();
  CovarianceMatrix<Scalar> R;
  // Rows of X are x_t^T, so X^T conj(X) = sum_t x_t x_t^H.
  R.data = CMatrix<Scalar>::Zero(n, n);
  R.data.template selfadjointView<Eigen::Lower>().rankUpdate(X.data.transpose());
  R.data = R.data.template selfadjointView<Eigen::Lower>();
  R.data /= Scalar(X.num_samples());
  R.data.diagonal().array() += Complex<Scalar>(diagonal_loading, 0);
  R.loading = diagonal_loading;
  return R;
}

/// Sample covariance loaded with relative_loading * trace(R) / N.
template <typename Scalar>
CovarianceMatrix<Scalar> sample_covariance_relative_loading(const SnapshotMatrix<Scalar>& X,
                                                            Scalar relative_loading = Scalar(1e-6)) {
  auto R = sample_covariance(X, Scalar(0));
  const Scalar loading = relative_loading * R.data.trace().real() / Scalar(R.size());
  R.data.diagonal().array() += Complex<Scalar>(loading, 0);
  R.loading = loading;
  return R;
}

/// V = b / (b^H b).
template <typename Scalar>
BeamWeights<Scalar> bartlett_weights(const CVector<Scalar>& steering) {
  const Scalar norm2 = steering.squaredNorm();
  if (!(norm2 > 0)) throw Error(Errc::ZeroSteeringVector, "steering vector is zero");
  return {steering / norm2};
}

/// Closed-form MVDR: V = R^{-1} b / (b^H R^{-1} b). Cholesky first, pivoted LU as fallback.
template <typename Scalar>
BeamWeights<Scalar> mvdr_weights(const CovarianceMatrix<Scalar>& R, const CVector<Scalar>& steering) {
  if (R.size() != steering.size())
    throw Error(Errc::DimensionMismatch, "covariance is " + std::to_string(R.size()) + "x" +
                                             std::to_string(R.size()) + ", steering vector has " +
                                             std::to_string(steering.size()) + " entries");
  if (!(steering.squaredNorm() > 0)) throw Error(Errc::ZeroSteeringVector, "steering vector is zero");

  CVector<Scalar> r_inv_b;
  Eigen::LLT<CMatrix<Scalar>> llt(R.data);
  if (llt.info() == Eigen::Success) {
    r_inv_b = llt.solve(steering);
  } else {
    Eigen::FullPivLU<CMatrix<Scalar>> lu(R.data);
    if (!lu.isInvertible()) throw Error(Errc::SingularCovariance, "covariance is singular; increase diagonal loading");
    r_inv_b = lu.solve(steering);
  }
  const Complex<Scalar> denom = steering.dot(r_inv_b);  // b^H R^{-1} b
  if (!std::isfinite(denom.real()) || !(std::abs(denom) > 0) || !r_inv_b.allFinite())
    throw Error(Errc::SingularCovariance, "b^H R^{-1} b is not a usable normalizer");
  // Dividing by the complex normalizer, not its real part, keeps V^H b = 1
  // to rounding even when R is only Hermitian up to rounding.
  return {r_inv_b / denom};
}

/// R[t] = V^H X(t).
template <typename Scalar>
CVector<Scalar> beamform(const BeamWeights<Scalar>& V, const SnapshotMatrix<Scalar>& X) {
  if (V.size() != X.num_elements())
    throw Error(Errc::DimensionMismatch, "weights have " + std::to_string(V.size()) + " entries, snapshots have " +
                                             std::to_string(X.num_elements()) + " sensors");
  return X.data * V.data.conjugate();
}

/// Output SINR in dB: sigma_s^2 |V^H b|^2 / (V^H R V).
template <typename Scalar>
Scalar sinr_db(const BeamWeights<Scalar>& V, Scalar sigma_s2, const CVector<Scalar>& steering,
               const CovarianceMatrix<Scalar>& R) {
  if (V.size() != steering.size() || V.size() != R.size())
    throw Error(Errc::DimensionMismatch, "weight, steering and covariance sizes disagree");
  const Scalar denom = V.data.dot(R.data * V.data).real();
  if (!(denom > 0)) throw Error(Errc::DegenerateDenominator, "V^H R V must be positive");
  const Scalar gain = std::norm(V.data.dot(steering));
  return Scalar(10) * std::log10(sigma_s2 * gain / denom);
}

/// 20 log10 |V^H a(theta)| over the grid, shifted so the grid maximum is 0 dB.
template <typename Scalar>
std::vector<Scalar> beampattern(const BeamWeights<Scalar>& V, const ArrayConfig<Scalar>& cfg,
                                const std::vector<Scalar>& azimuth_grid_deg, Scalar elevation_deg = 0) {
  if (azimuth_grid_deg.empty()) throw Error(Errc::EmptyInput, "beampattern grid is empty");
  if (V.size() != cfg.num_elements) throw Error(Errc::DimensionMismatch, "weights do not match the array");
  std::vector<Scalar> gain;
  gain.reserve(azimuth_grid_deg.size());
  for (Scalar az : azimuth_grid_deg) {
    const Scalar mag = std::abs(V.data.dot(steering_vector(cfg, az, elevation_deg)));
    gain.push_back(Scalar(20) * std::log10(std::max(mag, std::numeric_limits<Scalar>::min())));
  }
  const Scalar peak = *std::max_element(gain.begin(), gain.end());
  for (auto& g : gain) g -= peak;
  return gain;
}

}  // namespace beamcast
