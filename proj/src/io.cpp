#include "beamcast/io.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "beamcast/error.hpp"

namespace beamcast {
namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw Error(Errc::IoError, "empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) throw Error(Errc::IoError, "not a number: '" + s + "'");
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join_row(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    s += format_double(values[i]);
  }
  return s + '\n';
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& buf, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xff);
}

class Reader {
 public:
  Reader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

  void expect_magic(const std::string& magic) {
    if (data_.compare(0, magic.size(), magic) != 0) throw Error(Errc::IoError, name_ + ": bad magic, expected " + magic);
    pos_ = magic.size();
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw Error(Errc::IoError, name_ + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(Errc::IoError, name_ + ": truncated file");
  }
  std::string data_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::IoError, path.string() + ": missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size())
      throw Error(Errc::IoError, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_snapshots_csv(const fs::path& path, const SnapshotMatrix<double>& X) {
  std::string s = "t";
  for (Eigen::Index n = 0; n < X.num_elements(); ++n)
    s += ",re_" + std::to_string(n) + ",im_" + std::to_string(n);
  s += '\n';
  std::vector<double> row(static_cast<std::size_t>(1 + 2 * X.num_elements()));
  for (Eigen::Index t = 0; t < X.num_samples(); ++t) {
    row[0] = static_cast<double>(t);
    for (Eigen::Index n = 0; n < X.num_elements(); ++n) {
      row[static_cast<std::size_t>(1 + 2 * n)] = X.data(t, n).real();
      row[static_cast<std::size_t>(2 + 2 * n)] = X.data(t, n).imag();
    }
    s += join_row(row);
  }
  write_text(path, s);
}

SnapshotMatrix<double> read_snapshots_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "t" || t.header.size() % 2 != 1)
    throw Error(Errc::IoError, path.string() + ": not a snapshot table");
  const auto n = static_cast<Eigen::Index>((t.header.size() - 1) / 2);
  SnapshotMatrix<double> X;
  X.data.resize(static_cast<Eigen::Index>(t.rows.size()), n);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (Eigen::Index k = 0; k < n; ++k)
      X.data(static_cast<Eigen::Index>(r), k) = {parse_double(t.rows[r][static_cast<std::size_t>(1 + 2 * k)]),
                                                 parse_double(t.rows[r][static_cast<std::size_t>(2 + 2 * k)])};
  return X;
}

void write_series_csv(const fs::path& path, const Eigen::MatrixXd& channels) {
  std::string s = "t";
  for (Eigen::Index c = 0; c < channels.rows(); ++c) s += ",ch" + std::to_string(c);
  s += '\n';
  std::vector<double> row(static_cast<std::size_t>(1 + channels.rows()));
  for (Eigen::Index t = 0; t < channels.cols(); ++t) {
    row[0] = static_cast<double>(t);
    for (Eigen::Index c = 0; c < channels.rows(); ++c) row[static_cast<std::size_t>(1 + c)] = channels(c, t);
    s += join_row(row);
  }
  write_text(path, s);
}

Eigen::MatrixXd read_series_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "t") throw Error(Errc::IoError, path.string() + ": not a series table");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.header.size() - 1), static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (Eigen::Index c = 0; c < m.rows(); ++c)
      m(c, static_cast<Eigen::Index>(r)) = parse_double(t.rows[r][static_cast<std::size_t>(c + 1)]);
  return m;
}

void write_beampattern_csv(const fs::path& path, const std::vector<double>& azimuth_deg,
                           const std::vector<double>& gain_db) {
  if (azimuth_deg.size() != gain_db.size()) throw Error(Errc::LengthMismatch, "grid and gain lengths differ");
  std::string s = "azimuth_deg,gain_db\n";
  for (std::size_t i = 0; i < gain_db.size(); ++i) s += join_row({azimuth_deg[i], gain_db[i]});
  write_text(path, s);
}

void write_weights_csv(const fs::path& path, const BeamWeights<double>& V) {
  std::string s = "n,re,im\n";
  for (Eigen::Index n = 0; n < V.size(); ++n)
    s += join_row({static_cast<double>(n), V.data(n).real(), V.data(n).imag()});
  write_text(path, s);
}

BeamWeights<double> read_weights_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"n", "re", "im"}) throw Error(Errc::IoError, path.string() + ": bad header");
  BeamWeights<double> V;
  V.data.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    V.data(static_cast<Eigen::Index>(r)) = {parse_double(t.rows[r][1]), parse_double(t.rows[r][2])};
  return V;
}

void write_curve_csv(const fs::path& path, const std::string& index_name, const std::string& value_name,
                     const std::vector<double>& values) {
  std::string s = index_name + "," + value_name + "\n";
  for (std::size_t i = 0; i < values.size(); ++i) s += std::to_string(i) + "," + format_double(values[i]) + "\n";
  write_text(path, s);
}

void save_lstm(const fs::path& path, const LstmParams& p) {
  std::string buf = "LSTM1";
  put_u32(buf, static_cast<std::uint32_t>(p.input_size));
  put_u32(buf, static_cast<std::uint32_t>(p.hidden_size));
  for (const Eigen::MatrixXd* t : p.tensors())
    for (Eigen::Index r = 0; r < t->rows(); ++r)
      for (Eigen::Index c = 0; c < t->cols(); ++c) put_f64(buf, (*t)(r, c));
  write_text(path, buf);
}

LstmParams load_lstm(const fs::path& path) {
  Reader in(read_text(path), path.string());
  in.expect_magic("LSTM1");
  const std::uint32_t c = in.u32();
  const std::uint32_t h = in.u32();
  if (c == 0 || h == 0 || c > 1u << 16 || h > 1u << 16) throw Error(Errc::IoError, path.string() + ": bad shape");
  auto p = LstmParams::zeros(static_cast<int>(c), static_cast<int>(h));
  for (Eigen::MatrixXd* t : p.tensors())
    for (Eigen::Index r = 0; r < t->rows(); ++r)
      for (Eigen::Index k = 0; k < t->cols(); ++k) (*t)(r, k) = in.f64();
  in.expect_end();
  return p;
}

void save_nar(const fs::path& path, const NarParams& p) {
  std::string buf = "NARX1";
  put_u32(buf, static_cast<std::uint32_t>(p.delays));
  put_u32(buf, static_cast<std::uint32_t>(p.hidden));
  put_u32(buf, static_cast<std::uint32_t>(p.channels));
  for (Eigen::Index i = 0; i < p.chi.size(); ++i) put_f64(buf, p.chi(i));
  write_text(path, buf);
}

NarParams load_nar(const fs::path& path) {
  Reader in(read_text(path), path.string());
  in.expect_magic("NARX1");
  const std::uint32_t d = in.u32();
  const std::uint32_t h = in.u32();
  const std::uint32_t c = in.u32();
  if (d == 0 || c == 0 || d > 1u << 16 || h > 1u << 16 || c > 1u << 16)
    throw Error(Errc::IoError, path.string() + ": bad shape");
  auto p = NarParams::zeros(static_cast<int>(d), static_cast<int>(h), static_cast<int>(c));
  for (Eigen::Index i = 0; i < p.chi.size(); ++i) p.chi(i) = in.f64();
  in.expect_end();
  return p;
}

}  // namespace beamcast
