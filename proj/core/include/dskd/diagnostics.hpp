#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dskd/data.hpp"
#include "dskd/losses.hpp"
#include "dskd/model.hpp"

namespace dskd {

inline constexpr std::size_t kHistogramBins = 50;

/// Channel-wise cosine self-similarity, cross_correlation(F, F). Needs b ≥ 2 rows.
CrossCorrMatrix self_similarity(const Matrix& features, double eps = 1e-12);

/// Mean |C_ij| over i ≠ j; 0 when d = 1.
double offdiag_mass(const CrossCorrMatrix& c);

/// ldm(t, t) on row-normalised t (or raw t when normalize is false). Needs N ≥ 2.
double uniformity(const Matrix& t, double sigma = 1.0, bool normalize = true, double eps = 1e-12);

struct DistanceHistogram {
  std::vector<std::uint64_t> counts;  ///< kHistogramBins entries
  double max_distance = 0.0;
  double bin_width = 0.0;
  std::uint64_t total() const;
};

/// Pairwise L2 distances over unordered row pairs, binned into equal-width bins on
/// [0, max]; the maximum lands in the last bin. With max = 0 every pair is in bin 0.
DistanceHistogram distance_histogram(const Matrix& t, std::size_t bins = kHistogramBins);

/// Distances of all unordered pairs i < j, row-major over i.
std::vector<double> pairwise_distances(const Matrix& t);

/// Binary "P5" bytes: header, then one byte per entry, floor((c+1)/2·255 + 0.5).
std::string heatmap_pgm(const CrossCorrMatrix& c);
void write_heatmap_pgm(const CrossCorrMatrix& c, const std::filesystem::path& path);

/// Full matrix as CSV with 17 significant digits.
std::string matrix_to_csv(const Matrix& m);

struct DiagnosticsReport {
  CrossCorrMatrix self_similarity;
  double offdiag_mass = 0.0;
  /// On the intermediates the distribution-calibration loss sees: adapter output when present.
  double uniformity = 0.0;
  /// On the raw encoder tap t.
  double uniformity_tap = 0.0;
  DistanceHistogram histogram;
  std::string model_id;
  std::string split;
  std::uint64_t seed = 0;
  std::size_t rows = 0;
};

/// Runs the model on one split of a modality: self-similarity and off-diagonal mass
/// of the projected features z, uniformity of the (adapted) intermediates, and
/// uniformity and distance histogram of the encoder tap t.
DiagnosticsReport diagnose(const ModelParams& model, const PairedDataset& ds, Split split,
                           Modality modality, double sigma = 1.0, double eps = 1e-12);

std::string diagnostics_to_json(const DiagnosticsReport& r);

}  // namespace dskd
