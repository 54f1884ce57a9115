#include "dskd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dskd/checksum.hpp"
#include "json.hpp"

namespace dskd {

CrossCorrMatrix self_similarity(const Matrix& features, double eps) {
  if (features.rows() < 2) {
    throw std::invalid_argument("self_similarity: needs at least 2 rows, got " + features.shape_string());
  }
  return cross_correlation(features, features, eps);
}

double offdiag_mass(const CrossCorrMatrix& c) {
  const std::size_t d = c.c.rows();
  if (c.c.cols() != d) throw std::invalid_argument("offdiag_mass: matrix is not square " + c.c.shape_string());
  if (d < 2) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) s += std::abs(c.c(i, j));
  return s / static_cast<double>(d * (d - 1));
}

double uniformity(const Matrix& t, double sigma, bool normalize, double eps) {
  if (t.rows() < 2) throw std::invalid_argument("uniformity: needs at least 2 rows, got " + t.shape_string());
  const Matrix u = normalize ? l2_normalize_rows(t, eps) : t;
  return ldm(u, u, sigma).value;
}

std::uint64_t DistanceHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::vector<double> pairwise_distances(const Matrix& t) {
  std::vector<double> out;
  const std::size_t n = t.rows();
  out.reserve(n * (n - (n > 0)) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = t.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto b = t.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
      }
      out.push_back(std::sqrt(s));
    }
  }
  return out;
}

DistanceHistogram distance_histogram(const Matrix& t, std::size_t bins) {
  if (t.rows() < 2) throw std::invalid_argument("distance_histogram: needs at least 2 rows");
  if (bins < 1) throw std::invalid_argument("distance_histogram: needs at least one bin");
  const auto dist = pairwise_distances(t);
  DistanceHistogram h;
  h.counts.assign(bins, 0);
  h.max_distance = *std::max_element(dist.begin(), dist.end());
  h.bin_width = h.max_distance / static_cast<double>(bins);
  for (double d : dist) {
    std::size_t b = 0;
    if (h.bin_width > 0.0) b = std::min(static_cast<std::size_t>(std::floor(d / h.bin_width)), bins - 1);
    ++h.counts[b];
  }
  return h;
}

std::string heatmap_pgm(const CrossCorrMatrix& c) {
  std::string out = "P5\n" + std::to_string(c.c.cols()) + " " + std::to_string(c.c.rows()) + "\n255\n";
  out.reserve(out.size() + c.c.size());
  for (double v : c.c.data()) {
    if (!(v >= -1.0 - 1e-9 && v <= 1.0 + 1e-9)) {
      throw std::invalid_argument("heatmap_pgm: entry outside [-1, 1]");
    }
    const double p = std::floor((std::clamp(v, -1.0, 1.0) + 1.0) / 2.0 * 255.0 + 0.5);
    out.push_back(static_cast<char>(static_cast<unsigned char>(p)));
  }
  return out;
}

void write_heatmap_pgm(const CrossCorrMatrix& c, const std::filesystem::path& path) {
  write_file(path, heatmap_pgm(c));
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

DiagnosticsReport diagnose(const ModelParams& model, const PairedDataset& ds, Split split,
                           Modality modality, double sigma, double eps) {
  const auto idx = ds.indices(split);
  if (idx.size() < 2) throw std::invalid_argument("diagnose: split '" + to_string(split) + "' has fewer than 2 rows");
  const Matrix x = gather_rows(ds.features(modality), idx);
  if (x.cols() != model.architecture().input_dim()) {
    throw std::invalid_argument("diagnose: model input width does not match data " + x.shape_string());
  }
  const ForwardTrace tr = forward(model, x);
  DiagnosticsReport r;
  r.self_similarity = self_similarity(tr.z, eps);
  r.offdiag_mass = offdiag_mass(r.self_similarity);
  r.uniformity_tap = uniformity(tr.t, sigma, true, eps);
  r.uniformity = model.has_adapter() ? uniformity(tr.adapted, sigma, true, eps) : r.uniformity_tap;
  r.histogram = distance_histogram(tr.t);
  r.split = to_string(split);
  r.rows = idx.size();
  return r;
}

std::string diagnostics_to_json(const DiagnosticsReport& r) {
  nlohmann::ordered_json j;
  j["model_id"] = r.model_id;
  j["split"] = r.split;
  j["seed"] = r.seed;
  j["rows"] = r.rows;
  j["projection_dim"] = r.self_similarity.dim();
  j["offdiag_mass"] = r.offdiag_mass;
  j["uniformity"] = r.uniformity;
  j["uniformity_tap"] = r.uniformity_tap;
  j["histogram"] = {{"bins", r.histogram.counts.size()},
                    {"max_distance", r.histogram.max_distance},
                    {"bin_width", r.histogram.bin_width},
                    {"counts", r.histogram.counts}};
  return j.dump(2) + "\n";
}

}  // namespace dskd
