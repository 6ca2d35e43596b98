#pragma once

// Narrowband uniform-linear-array signal synthesis: steering vectors,
// rectangular pulses, plane-wave superposition and additive noise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "beamcast/error.hpp"
#include "beamcast/types.hpp"

namespace beamcast {

template <typename Scalar>
struct ArrayConfig {
  int num_elements = 64;
  Scalar spacing_wavelengths = Scalar(0.5);
  Scalar carrier_freq_hz = Scalar(700e6);

  void validate() const {
    if (num_elements < 1) throw Error(Errc::InvalidConfig, "num_elements must be >= 1");
    if (!(spacing_wavelengths > 0)) throw Error(Errc::InvalidConfig, "spacing_wavelengths must be > 0");
    if (!(carrier_freq_hz > 0)) throw Error(Errc::InvalidConfig, "carrier_freq_hz must be > 0");
  }
};

enum class SourceKind { Desired, Interference };

template <typename Scalar>
struct PlaneWaveSource {
  Scalar azimuth_deg = 0;
  Scalar elevation_deg = 0;
  CVector<Scalar> waveform;
  SourceKind kind = SourceKind::Desired;
};

/// T x N received samples; row t is the snapshot X(t), column n is sensor n.
template <typename Scalar>
struct SnapshotMatrix {
  CMatrix<Scalar> data;
  Scalar sample_rate_hz = Scalar(1000);

  Eigen::Index num_samples() const { return data.rows(); }
  Eigen::Index num_elements() const { return data.cols(); }
};

/// Element n carries phase -2*pi*d*n*sin(az)*cos(el); element 0 is the reference.
template <typename Scalar>
CVector<Scalar> steering_vector(const ArrayConfig<Scalar>& cfg, Scalar azimuth_deg, Scalar elevation_deg = 0) {
  cfg.validate();
  const Scalar dphi = -Scalar(2) * kPi<Scalar> * cfg.spacing_wavelengths * std::sin(deg2rad(azimuth_deg)) *
                      std::cos(deg2rad(elevation_deg));
  CVector<Scalar> a(cfg.num_elements);
  for (int n = 0; n < cfg.num_elements; ++n) a(n) = std::polar(Scalar(1), dphi * Scalar(n));
  return a;
}

/// The first ceil(on_fraction * num_samples) samples equal `amplitude`, the rest are zero.
template <typename Scalar>
CVector<Scalar> rectangular_pulse(Eigen::Index num_samples, Scalar on_fraction, Complex<Scalar> amplitude) {
  if (num_samples < 1) throw Error(Errc::InvalidConfig, "pulse needs at least one sample");
  if (!(on_fraction > 0 && on_fraction <= 1)) throw Error(Errc::InvalidConfig, "on_fraction must lie in (0, 1]");
  // Guard against products like 0.3 * 10 landing just above an integer.
  const Scalar product = on_fraction * Scalar(num_samples);
  auto on = static_cast<Eigen::Index>(std::ceil(product - Scalar(64) * std::numeric_limits<Scalar>::epsilon() * product));
  on = std::clamp<Eigen::Index>(on, 1, num_samples);
  CVector<Scalar> p = CVector<Scalar>::Zero(num_samples);
  p.head(on).setConstant(amplitude);
  return p;
}

/// Periodic train of rectangular pulses: `period` samples per cycle, each cycle a rectangular_pulse.
template <typename Scalar>
CVector<Scalar> rectangular_pulse_train(Eigen::Index num_samples, Eigen::Index period, Scalar on_fraction,
                                        Complex<Scalar> amplitude) {
  if (period <= 0 || period >= num_samples) return rectangular_pulse(num_samples, on_fraction, amplitude);
  const CVector<Scalar> cycle = rectangular_pulse(period, on_fraction, amplitude);
  CVector<Scalar> p(num_samples);
  for (Eigen::Index t = 0; t < num_samples; ++t) p(t) = cycle(t % period);
  return p;
}

template <typename Scalar>
SnapshotMatrix<Scalar> collect_plane_waves(const ArrayConfig<Scalar>& cfg,
                                           const std::vector<PlaneWaveSource<Scalar>>& sources,
                                           Eigen::Index num_samples) {
  cfg.validate();
  bool has_desired = false;
  for (const auto& s : sources) {
    if (s.waveform.size() != num_samples)
      throw Error(Errc::MismatchedLength, "waveform length " + std::to_string(s.waveform.size()) +
                                              " != snapshot count " + std::to_string(num_samples));
    has_desired = has_desired || s.kind == SourceKind::Desired;
  }
  if (!has_desired) throw Error(Errc::InvalidConfig, "at least one desired source is required");

  SnapshotMatrix<Scalar> X;
  X.data = CMatrix<Scalar>::Zero(num_samples, cfg.num_elements);
  for (const auto& s : sources)
    X.data.noalias() += s.waveform * steering_vector(cfg, s.azimuth_deg, s.elevation_deg).transpose();
  return X;
}

/// Adds circular complex Gaussian noise of the given per-element variance.
/// Draws proceed sensor by sensor, so an array that is a prefix of a larger
/// one receives exactly the same noise on its shared sensors.
template <typename Scalar>
SnapshotMatrix<Scalar> add_noise_with_variance(SnapshotMatrix<Scalar> X, Scalar variance, std::uint64_t seed) {
  if (X.data.size() == 0) throw Error(Errc::EmptyInput, "cannot add noise to an empty snapshot matrix");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> gauss(Scalar(0), std::sqrt(variance / Scalar(2)));
  for (Eigen::Index n = 0; n < X.data.cols(); ++n)
    for (Eigen::Index t = 0; t < X.data.rows(); ++t) {
      const Scalar re = gauss(rng);
      const Scalar im = gauss(rng);
      X.data(t, n) += Complex<Scalar>(re, im);
    }
  return X;
}

template <typename Scalar>
Scalar mean_power(const CMatrix<Scalar>& data) {
  return data.cwiseAbs2().mean();
}

/// Noise variance chosen so that mean signal power / variance = 10^(snr_db/10).
template <typename Scalar>
SnapshotMatrix<Scalar> add_noise(SnapshotMatrix<Scalar> X, Scalar snr_db, std::uint64_t seed) {
  if (X.data.size() == 0) throw Error(Errc::EmptyInput, "cannot add noise to an empty snapshot matrix");
  const Scalar variance = mean_power(X.data) / std::pow(Scalar(10), snr_db / Scalar(10));
  return add_noise_with_variance(std::move(X), variance, seed);
}

}  // namespace beamcast
