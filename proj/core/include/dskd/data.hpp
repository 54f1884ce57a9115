#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dskd/numerics.hpp"

namespace dskd {

enum class Split : std::uint8_t { train, test };
enum class Modality : std::uint8_t { m1, m2 };

std::string to_string(Split s);
Split split_from_string(const std::string& s);
std::string to_string(Modality m);
Modality modality_from_string(const std::string& s);

/// Aligned (x_m1, x_m2, y) triples. m1 is the low-quality modality the student
/// sees, m2 the clean modality the teacher sees.
struct PairedDataset {
  Matrix x_m1;
  Matrix x_m2;
  std::vector<int> labels;
  std::vector<Split> split;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return x_m1.cols(); }
  const Matrix& features(Modality m) const noexcept { return m == Modality::m1 ? x_m1 : x_m2; }
  std::vector<std::size_t> indices(Split s) const;

  /// Throws std::invalid_argument if shapes, labels or splits are inconsistent.
  void validate() const;

  friend bool operator==(const PairedDataset&, const PairedDataset&) = default;
};

/// Synthetic task description.
struct GenSpec {
  std::size_t classes = 8;
  std::size_t dim = 100;
  std::size_t per_class = 625;
  double corruption_rate = 0.3;
  /// Impulse magnitude; ≤ 0 selects 3 × the standard deviation of the clean features.
  double corruption_amplitude = 0.0;
  /// Standard deviation of each Gaussian cluster around its class centre.
  double cluster_std = 1.5;
  /// Seed of the fixed random two-layer tanh map shared by all samples.
  std::uint64_t nonlinearity_seed = 1234;
  double train_fraction = 0.8;

  void validate() const;
};

/// Clean features: Gaussian class clusters pushed through a fixed random
/// two-layer tanh map. m1 copies m2 with each coordinate independently replaced,
/// with probability corruption_rate, by ±amplitude. Row i has label i mod K,
/// and the train/test split is stratified per class.
PairedDataset generate(const GenSpec& spec, SeededRng& rng);

/// Mask of corrupted m1 entries produced alongside `generate`, for diagnostics.
Matrix corruption_mask(const PairedDataset& ds);

/// Reads one-row-per-sample CSVs. A first row whose first cell is not numeric is
/// treated as a header. Without a split file, every fifth row (i % 5 == 4) is test.
PairedDataset load_csv(const std::filesystem::path& m1, const std::filesystem::path& m2,
                       const std::filesystem::path& labels,
                       const std::optional<std::filesystem::path>& split = std::nullopt,
                       std::optional<std::size_t> num_classes = std::nullopt);

/// Writes m1.csv, m2.csv, labels.csv, split.csv into `dir` (created if needed).
void save_csv(const PairedDataset& ds, const std::filesystem::path& dir);

/// Loads a directory written by save_csv.
PairedDataset load_dataset_dir(const std::filesystem::path& dir,
                               std::optional<std::size_t> num_classes = std::nullopt);

/// Seeded shuffle of `indices` cut into consecutive blocks; the final partial block is kept.
std::vector<std::vector<std::size_t>> batches(std::vector<std::size_t> indices,
                                              std::size_t batch_size, SeededRng& rng);
std::vector<std::vector<std::size_t>> batches(const PairedDataset& ds, Split split,
                                              std::size_t batch_size, SeededRng& rng);

}  // namespace dskd
