#include "monolab/dataset.hpp"

#include "monolab/io.hpp"
#include "monolab/rng.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace monolab {

namespace {

void validate(const DataSpec& spec) {
  if (spec.num_samples < 1) throw std::invalid_argument("num_samples must be >= 1");
  if (spec.num_features < 1) throw std::invalid_argument("num_features must be >= 1");
  if (spec.sparsity < 0.0 || spec.sparsity > 1.0)
    throw std::invalid_argument("sparsity must lie in [0,1]");
  if (spec.sparsity == 1.0)
    throw std::invalid_argument("sparsity 1 leaves no nonzero rows to sample");
}

}  // namespace

Dataset generate(const DataSpec& spec) {
  validate(spec);
  RandomStream rs("synthdata.generate", spec.seed);
  const int n = spec.num_features;
  Dataset data;
  data.X.resize(spec.num_samples, n);
  data.y.resize(spec.num_samples);
  data.spec = spec;
  for (int i = 0; i < spec.num_samples; ++i) {
    int best = 0;
    for (;;) {
      double best_value = 0.0;
      best = -1;
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        if (rs.next_double() >= spec.sparsity) v = rs.next_open_closed();
        data.X(i, j) = v;
        if (v > best_value) {
          best_value = v;
          best = j;
        }
      }
      if (best >= 0) break;  // at least one strictly positive coordinate
    }
    data.y[i] = best;
  }
  return data;
}

std::vector<int> flip_labels(const std::vector<int>& y, int num_classes, double eta,
                             uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  if (eta < 0.0 || eta >= 1.0) throw std::invalid_argument("eta must lie in [0,1)");
  RandomStream rs("synthdata.flip_labels", seed);
  std::vector<int> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    int label = y[i];
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("label outside [0, num_classes)");
    if (eta > 0.0 && rs.next_double() < eta) {
      // Uniform over the other classes only.
      const int k = static_cast<int>(rs.next_below(static_cast<uint64_t>(num_classes - 1)));
      label = k >= label ? k + 1 : k;
    }
    out[i] = label;
  }
  return out;
}

Eigen::MatrixXd perturb_inputs(const Eigen::MatrixXd& X, const NoiseSpec& spec) {
  if (spec.kind == NoiseSpec::Kind::label_symmetric)
    throw std::invalid_argument("perturb_inputs requires an input-noise kind");
  if (spec.rate_or_strength < 0.0)
    throw std::invalid_argument("noise strength must be >= 0");
  Eigen::MatrixXd out = X;
  const double w = spec.rate_or_strength;
  if (w == 0.0) return out;
  if (spec.kind == NoiseSpec::Kind::input_gaussian) {
    RandomStream rs("synthdata.perturb.gaussian", spec.seed);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += w * rs.next_normal();
  } else {
    RandomStream rs("synthdata.perturb.uniform", spec.seed);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        out(i, j) += w * (2.0 * rs.next_double() - 1.0);
  }
  return out;
}

namespace {

constexpr char kDatasetMagic[8] = {'M', 'L', 'D', 'A', 'T', 'A', '0', '1'};

template <typename T>
void write_raw(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("truncated dataset file");
  return v;
}

}  // namespace

void save_dataset_binary(const Dataset& data, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "on-disk format is little-endian");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_raw<uint64_t>(f, static_cast<uint64_t>(data.X.rows()));
  write_raw<uint64_t>(f, static_cast<uint64_t>(data.X.cols()));
  write_raw<double>(f, data.spec.sparsity);
  write_raw<uint64_t>(f, data.spec.seed);
  for (Eigen::Index i = 0; i < data.X.rows(); ++i)
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) write_raw<double>(f, data.X(i, j));
  for (int label : data.y) write_raw<int32_t>(f, static_cast<int32_t>(label));
  if (!f) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a dataset file: " + path);
  const auto rows = read_raw<uint64_t>(f);
  const auto cols = read_raw<uint64_t>(f);
  Dataset data;
  data.spec.sparsity = read_raw<double>(f);
  data.spec.seed = read_raw<uint64_t>(f);
  data.spec.num_samples = static_cast<int>(rows);
  data.spec.num_features = static_cast<int>(cols);
  data.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < data.X.rows(); ++i)
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) data.X(i, j) = read_raw<double>(f);
  data.y.resize(rows);
  for (auto& label : data.y) label = read_raw<int32_t>(f);
  return data;
}

void save_dataset_csv(const Dataset& data, const std::string& path) {
  std::string out;
  for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
    out += "x" + std::to_string(j) + ",";
  }
  out += "y\n";
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
      out += io::format_double(data.X(i, j));
      out += ',';
    }
    out += std::to_string(data.y[static_cast<size_t>(i)]);
    out += '\n';
  }
  io::write_text(path, out);
}

Dataset load_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
  int cols = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) ++cols;
    if (cols < 2) throw std::runtime_error("dataset csv needs x columns and y");
    --cols;  // last column is the label
  }
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    for (int j = 0; j < cols; ++j) {
      if (!std::getline(row, cell, ',')) throw std::runtime_error("short row in " + path);
      values.push_back(std::stod(cell));
    }
    if (!std::getline(row, cell, ',')) throw std::runtime_error("missing label in " + path);
    labels.push_back(std::stoi(cell));
  }
  Dataset data;
  const auto rows = static_cast<Eigen::Index>(labels.size());
  data.X.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      data.X(i, j) = values[static_cast<size_t>(i) * cols + j];
  data.y = std::move(labels);
  data.spec.num_samples = static_cast<int>(rows);
  data.spec.num_features = cols;
  return data;
}

}  // namespace monolab
