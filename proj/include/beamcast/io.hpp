#pragma once

// File formats: CSV tables (17 significant digits) and the binary parameter
// files of both forecasters. All failures raise Errc::IoError.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamcast/array_model.hpp"
#include "beamcast/beamformer.hpp"
#include "beamcast/lstm.hpp"
#include "beamcast/nar.hpp"

namespace beamcast {

/// Shortest text that round-trips exactly ("%.17g").
std::string format_double(double v);
double parse_double(const std::string& s);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Header plus rows of numbers; every row must have the header's width.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

// t,re_0,im_0,...,re_{N-1},im_{N-1}
void write_snapshots_csv(const std::filesystem::path& path, const SnapshotMatrix<double>& X);
SnapshotMatrix<double> read_snapshots_csv(const std::filesystem::path& path);

// t,ch0,ch1,... (one column per channel, one row per time step)
void write_series_csv(const std::filesystem::path& path, const Eigen::MatrixXd& channels);
Eigen::MatrixXd read_series_csv(const std::filesystem::path& path);

// azimuth_deg,gain_db
void write_beampattern_csv(const std::filesystem::path& path, const std::vector<double>& azimuth_deg,
                           const std::vector<double>& gain_db);

// n,re,im
void write_weights_csv(const std::filesystem::path& path, const BeamWeights<double>& V);
BeamWeights<double> read_weights_csv(const std::filesystem::path& path);

// <index_name>,<value_name>
void write_curve_csv(const std::filesystem::path& path, const std::string& index_name,
                     const std::string& value_name, const std::vector<double>& values);

/// "LSTM1", C and H as u32 LE, then every tensor row-major as f64 LE.
void save_lstm(const std::filesystem::path& path, const LstmParams& p);
LstmParams load_lstm(const std::filesystem::path& path);

/// "NARX1", p, hidden, C as u32 LE, then the flat parameter vector as f64 LE.
/// The activation is not stored: hidden > 0 loads as tanh.
void save_nar(const std::filesystem::path& path, const NarParams& p);
NarParams load_nar(const std::filesystem::path& path);

}  // namespace beamcast
