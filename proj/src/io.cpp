#include "monolab/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace monolab::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr char kTensorMagic[8] = {'M', 'L', 'T', 'N', 'S', 'R', '0', '1'};

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("truncated tensor file");
  return v;
}

}  // namespace

void write_tensor(const std::string& path, const Eigen::MatrixXd& m) {
  static_assert(std::endian::native == std::endian::little,
                "on-disk format is little-endian");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kTensorMagic, sizeof(kTensorMagic));
  write_raw<uint32_t>(f, 1);  // dtype f64
  write_raw<uint32_t>(f, 2);  // rank
  write_raw<uint64_t>(f, static_cast<uint64_t>(m.rows()));
  write_raw<uint64_t>(f, static_cast<uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) write_raw<double>(f, m(i, j));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Eigen::MatrixXd read_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a tensor file: " + path);
  if (read_raw<uint32_t>(f) != 1) throw std::runtime_error("unsupported dtype");
  if (read_raw<uint32_t>(f) != 2) throw std::runtime_error("unsupported rank");
  const auto rows = read_raw<uint64_t>(f);
  const auto cols = read_raw<uint64_t>(f);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_raw<double>(f);
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
  if (!header.empty() && static_cast<Eigen::Index>(header.size()) != m.cols())
    throw std::invalid_argument("header width does not match matrix");
  std::string out;
  for (size_t j = 0; j < header.size(); ++j) {
    out += header[j];
    out += j + 1 < header.size() ? ',' : '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += format_double(m(i, j));
      out += j + 1 < m.cols() ? ',' : '\n';
    }
  }
  write_text(path, out);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return out;
}

}  // namespace monolab::io
