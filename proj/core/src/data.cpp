#include "dskd/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dskd {
namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE && std::isfinite(out);
}

/// Non-empty lines of a CSV file, with an optional header row removed.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(split_cells(line));
  }
  if (!rows.empty()) {
    double probe;
    const auto& first = rows.front().front();
    if (!parse_double(first, probe) && first != "train" && first != "test") rows.erase(rows.begin());
  }
  return rows;
}

Matrix read_matrix(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw std::runtime_error("'" + path.string() + "' contains no data rows");
  const std::size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw std::runtime_error("'" + path.string() + "' data row " + std::to_string(r + 1) +
                               " has " + std::to_string(rows[r].size()) + " cells, expected " +
                               std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!parse_double(rows[r][c], m(r, c))) {
        throw std::runtime_error("'" + path.string() + "' data row " + std::to_string(r + 1) +
                                 ", column " + std::to_string(c + 1) + ": cannot parse '" +
                                 rows[r][c] + "'");
      }
    }
  }
  return m;
}

void write_matrix(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) os << ',';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Matrix random_matrix(std::size_t rows, std::size_t cols, double scale, SeededRng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

}  // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "' (expected train or test)");
}

std::string to_string(Modality m) { return m == Modality::m1 ? "m1" : "m2"; }

Modality modality_from_string(const std::string& s) {
  if (s == "m1") return Modality::m1;
  if (s == "m2") return Modality::m2;
  throw std::invalid_argument("unknown modality '" + s + "' (expected m1 or m2)");
}

std::vector<std::size_t> PairedDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

void PairedDataset::validate() const {
  const std::size_t n = labels.size();
  if (x_m1.rows() != n || x_m2.rows() != n || split.size() != n) {
    throw std::invalid_argument("dataset: row counts differ (m1 " + std::to_string(x_m1.rows()) +
                                ", m2 " + std::to_string(x_m2.rows()) + ", labels " +
                                std::to_string(n) + ", split " + std::to_string(split.size()) + ")");
  }
  if (x_m1.cols() != x_m2.cols()) {
    throw std::invalid_argument("dataset: modality widths differ (" + std::to_string(x_m1.cols()) +
                                " vs " + std::to_string(x_m2.cols()) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
  const auto n_train = static_cast<std::size_t>(std::count(split.begin(), split.end(), Split::train));
  if (n_train == 0 || n_train == n) throw std::invalid_argument("dataset: train and test splits must both be non-empty");
}

void GenSpec::validate() const {
  if (classes < 2) throw std::invalid_argument("GenSpec: classes must be >= 2");
  if (dim < 2) throw std::invalid_argument("GenSpec: dim must be >= 2");
  if (per_class < 2) throw std::invalid_argument("GenSpec: per_class must be >= 2");
  if (!(corruption_rate >= 0.0 && corruption_rate <= 1.0)) {
    throw std::invalid_argument("GenSpec: corruption_rate must lie in [0, 1]");
  }
  if (!(cluster_std >= 0.0)) throw std::invalid_argument("GenSpec: cluster_std must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("GenSpec: train_fraction must lie in (0, 1)");
  }
}

PairedDataset generate(const GenSpec& spec, SeededRng& rng) {
  spec.validate();
  const std::size_t k = spec.classes, d = spec.dim, n = k * spec.per_class;

  // Fixed nonlinear map, independent of the sampling stream.
  SeededRng map_rng(spec.nonlinearity_seed);
  const double gain = 1.5 / std::sqrt(static_cast<double>(d));
  const Matrix w1 = random_matrix(d, d, gain, map_rng);
  const Matrix w2 = random_matrix(d, d, gain, map_rng);
  const auto b1 = map_rng.normal(d);
  const auto b2 = map_rng.normal(d);

  const Matrix centers = random_matrix(k, d, 1.0, rng);
  const double shrink = 1.0 / std::sqrt(1.0 + spec.cluster_std * spec.cluster_std);

  PairedDataset ds;
  ds.num_classes = k;
  ds.labels.resize(n);
  Matrix latent(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = i % k;
    ds.labels[i] = static_cast<int>(y);
    for (std::size_t j = 0; j < d; ++j)
      latent(i, j) = (centers(y, j) + spec.cluster_std * rng.normal()) * shrink;
  }
  Matrix h = matmul(latent, w1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) = std::tanh(h(i, j) + 0.5 * b1[j]);
  ds.x_m2 = matmul(h, w2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) ds.x_m2(i, j) = std::tanh(ds.x_m2(i, j) + 0.5 * b2[j]);

  double amplitude = spec.corruption_amplitude;
  if (amplitude <= 0.0) {
    double mean = 0.0, sq = 0.0;
    for (double v : ds.x_m2.data()) mean += v;
    mean /= static_cast<double>(ds.x_m2.size());
    for (double v : ds.x_m2.data()) sq += (v - mean) * (v - mean);
    amplitude = 3.0 * std::sqrt(sq / static_cast<double>(ds.x_m2.size()));
  }

  ds.x_m1 = ds.x_m2;
  for (double& v : ds.x_m1.data()) {
    if (rng.uniform() < spec.corruption_rate) v = (rng.uniform() < 0.5) ? -amplitude : amplitude;
  }

  ds.split.assign(n, Split::test);
  for (std::size_t y = 0; y < k; ++y) {
    std::vector<std::size_t> members;
    for (std::size_t i = y; i < n; i += k) members.push_back(i);
    for (std::size_t i = members.size(); i-- > 1;) std::swap(members[i], members[rng.below(i + 1)]);
    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < n_train; ++i) ds.split[members[i]] = Split::train;
  }
  ds.validate();
  return ds;
}

Matrix corruption_mask(const PairedDataset& ds) {
  Matrix m(ds.x_m1.rows(), ds.x_m1.cols());
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = ds.x_m1.data()[i] != ds.x_m2.data()[i] ? 1.0 : 0.0;
  return m;
}

PairedDataset load_csv(const std::filesystem::path& m1, const std::filesystem::path& m2,
                       const std::filesystem::path& labels,
                       const std::optional<std::filesystem::path>& split,
                       std::optional<std::size_t> num_classes) {
  PairedDataset ds;
  ds.x_m1 = read_matrix(m1);
  ds.x_m2 = read_matrix(m2);
  if (ds.x_m1.rows() != ds.x_m2.rows()) {
    throw std::runtime_error("row-count mismatch: '" + m1.string() + "' has " +
                             std::to_string(ds.x_m1.rows()) + " rows, '" + m2.string() + "' has " +
                             std::to_string(ds.x_m2.rows()));
  }
  const auto label_rows = read_rows(labels);
  if (label_rows.size() != ds.x_m1.rows()) {
    throw std::runtime_error("row-count mismatch: features have " + std::to_string(ds.x_m1.rows()) +
                             " rows, '" + labels.string() + "' has " +
                             std::to_string(label_rows.size()));
  }
  int max_label = -1;
  for (std::size_t r = 0; r < label_rows.size(); ++r) {
    double v;
    if (!parse_double(label_rows[r].front(), v) || v != std::floor(v) || v < 0) {
      throw std::runtime_error("'" + labels.string() + "' data row " + std::to_string(r + 1) +
                               ": invalid class label '" + label_rows[r].front() + "'");
    }
    ds.labels.push_back(static_cast<int>(v));
    max_label = std::max(max_label, ds.labels.back());
  }
  ds.num_classes = num_classes.value_or(static_cast<std::size_t>(max_label + 1));

  if (split) {
    const auto split_rows = read_rows(*split);
    if (split_rows.size() != ds.labels.size()) {
      throw std::runtime_error("row-count mismatch: features have " +
                               std::to_string(ds.labels.size()) + " rows, '" + split->string() +
                               "' has " + std::to_string(split_rows.size()));
    }
    for (const auto& row : split_rows) ds.split.push_back(split_from_string(row.front()));
  } else {
    for (std::size_t i = 0; i < ds.labels.size(); ++i)
      ds.split.push_back(i % 5 == 4 ? Split::test : Split::train);
  }
  ds.validate();
  return ds;
}

void save_csv(const PairedDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix(ds.x_m1, dir / "m1.csv");
  write_matrix(ds.x_m2, dir / "m2.csv");
  std::ofstream lab(dir / "labels.csv", std::ios::binary);
  std::ofstream spl(dir / "split.csv", std::ios::binary);
  if (!lab || !spl) throw std::runtime_error("cannot write dataset files under '" + dir.string() + "'");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    lab << ds.labels[i] << '\n';
    spl << to_string(ds.split[i]) << '\n';
  }
}

PairedDataset load_dataset_dir(const std::filesystem::path& dir,
                               std::optional<std::size_t> num_classes) {
  const auto split = dir / "split.csv";
  return load_csv(dir / "m1.csv", dir / "m2.csv", dir / "labels.csv",
                  std::filesystem::exists(split) ? std::optional(split) : std::nullopt, num_classes);
}

std::vector<std::vector<std::size_t>> batches(std::vector<std::size_t> indices,
                                              std::size_t batch_size, SeededRng& rng) {
  if (batch_size == 0) throw std::invalid_argument("batches: batch_size must be >= 1");
  if (indices.empty()) throw std::invalid_argument("batches: empty split");
  for (std::size_t i = indices.size(); i-- > 1;) std::swap(indices[i], indices[rng.below(i + 1)]);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < indices.size(); s += batch_size) {
    const std::size_t e = std::min(indices.size(), s + batch_size);
    out.emplace_back(indices.begin() + static_cast<std::ptrdiff_t>(s),
                     indices.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return out;
}

std::vector<std::vector<std::size_t>> batches(const PairedDataset& ds, Split split,
                                              std::size_t batch_size, SeededRng& rng) {
  return batches(ds.indices(split), batch_size, rng);
}

}  // namespace dskd
