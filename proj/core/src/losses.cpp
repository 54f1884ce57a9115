#include "dskd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simd.hpp"

namespace dskd {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
  }
}

void require_labels(std::span<const int> labels, std::size_t rows, std::size_t classes,
                    const char* op) {
  if (labels.size() != rows) {
    throw std::invalid_argument(std::string(op) + ": " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(rows) + " rows");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw std::invalid_argument(std::string(op) + ": label " + std::to_string(labels[i]) +
                                  " at row " + std::to_string(i) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
  }
}

double squared_distance(std::span<const double> u, std::span<const double> v) {
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - v[k];
    acc += d * d;
  }
  return acc;
}

// acc[j] = Σ_k (q[k] − vt[k, j])², k ascending.
DSKD_VECTOR_CLONES
void distances_to_columns(const double* q, const double* vt, std::size_t d, std::size_t n,
                          double* acc) {
  for (std::size_t j = 0; j < n; ++j) acc[j] = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double qk = q[k];
    const double* __restrict col = vt + k * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = qk - col[j];
      acc[j] += diff * diff;
    }
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("LossConfig: tau must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("LossConfig: sigma must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("LossConfig: lambda must be >= 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("LossConfig: gamma must be >= 0");
  if (!(eps > 0.0 && eps <= 1e-6)) throw std::invalid_argument("LossConfig: eps must be in (0, 1e-6]");
}

const Matrix& ValueWithGrad::grad(std::string_view role) const {
  auto it = grads.find(role);
  if (it == grads.end()) throw std::out_of_range("no gradient for role '" + std::string(role) + "'");
  return it->second;
}

ValueWithGrad cross_entropy(const Matrix& probs, std::span<const int> labels) {
  require_labels(labels, probs.rows(), probs.cols(), "cross_entropy");
  const std::size_t n = probs.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double p : probs.row(i)) {
      if (p < 0.0) throw std::invalid_argument("cross_entropy: negative probability in row " + std::to_string(i));
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument("cross_entropy: row " + std::to_string(i) +
                                  " is not normalised (sum " + std::to_string(s) + ")");
    }
  }
  ValueWithGrad out;
  Matrix g(probs.rows(), probs.cols());
  double acc = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const double p = probs(i, y);
    acc -= std::log(std::max(p, kLogFloor));
    g(i, y) = p > kLogFloor ? -inv_n / p : 0.0;
  }
  out.value = n == 0 ? 0.0 : acc * inv_n;
  out.grads.emplace("probs", std::move(g));
  return out;
}

Matrix soften(const Matrix& logits, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("soften: tau must be > 0");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      o[k] = std::exp((in[k] - m) / tau);
      s += o[k];
    }
    for (double& v : o) v /= s;
  }
  return out;
}

ValueWithGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  require_labels(labels, logits.rows(), logits.cols(), "softmax_cross_entropy");
  Matrix p = soften(logits, 1.0);
  const std::size_t n = logits.rows();
  const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    acc -= std::log(std::max(p(i, y), kLogFloor));
    p(i, y) -= 1.0;
    for (double& v : p.row(i)) v *= inv_n;
  }
  ValueWithGrad out;
  out.value = acc * inv_n;
  out.grads.emplace("logits", std::move(p));
  return out;
}

ValueWithGrad kd_divergence(const Matrix& p_student, const Matrix& p_teacher) {
  require_same_shape(p_student, p_teacher, "kd_divergence");
  const std::size_t n = p_student.rows();
  const double inv_n = n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
  Matrix g(p_student.rows(), p_student.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p_student.cols(); ++k) {
      const double q = p_teacher(i, k);
      if (q <= 0.0) continue;
      const double p = std::max(p_student(i, k), kLogFloor);
      acc += q * (std::log(std::max(q, kLogFloor)) - std::log(p));
      g(i, k) = -q * inv_n / p;
    }
  }
  ValueWithGrad out;
  out.value = acc * inv_n;
  out.grads.emplace("student", std::move(g));
  return out;
}

ValueWithGrad kd_logit_divergence(const Matrix& student_logits, const Matrix& teacher_logits,
                                  double tau) {
  require_same_shape(student_logits, teacher_logits, "kd_logit_divergence");
  const Matrix ps = soften(student_logits, tau);
  const Matrix pt = soften(teacher_logits, tau);
  ValueWithGrad kl = kd_divergence(ps, pt);
  const std::size_t n = ps.rows();
  const double scale = n == 0 ? 0.0 : 1.0 / (static_cast<double>(n) * tau);
  Matrix g(ps.rows(), ps.cols());
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = (ps.data()[i] - pt.data()[i]) * scale;
  ValueWithGrad out;
  out.value = kl.value;
  out.grads.emplace("logits", std::move(g));
  return out;
}

ValueWithGrad gram_divergence(const Matrix& z1, const Matrix& z2) {
  require_same_shape(z1, z2, "gram_divergence");
  const std::size_t d = z1.cols();
  Matrix diff = matmul_tn(z1, z1);
  const Matrix g2 = matmul_tn(z2, z2);
  const double inv = d == 0 ? 0.0 : 1.0 / static_cast<double>(d * d);
  double acc = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    double& e = diff.data()[i];
    e -= g2.data()[i];
    acc += e * e;
    e *= 4.0 * inv;  // d/dz1 of Σ E² / d² through z1ᵀz1 is z1 · 4E / d² for symmetric E
  }
  ValueWithGrad out;
  out.value = acc * inv;
  out.grads.emplace("z1", matmul(z1, diff));
  return out;
}

CrossCorrMatrix cross_correlation(const Matrix& z1, const Matrix& z2, double eps) {
  require_same_shape(z1, z2, "cross_correlation");
  Matrix c = matmul_tn(z1, z2);
  const auto n1 = column_l2_norms(z1);
  const auto n2 = column_l2_norms(z2);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    const double a = std::max(n1[i], eps);
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) /= a * std::max(n2[j], eps);
  }
  return {std::move(c)};
}

ValueWithGrad sem_loss(const Matrix& z1, const Matrix& z2, double lambda, double eps,
                       SemTerms terms) {
  require_same_shape(z1, z2, "sem_loss");
  const std::size_t d = z1.cols();
  const Matrix c = cross_correlation(z1, z2, eps).c;
  const auto n1 = column_l2_norms(z1);
  const auto n2 = column_l2_norms(z2);

  double diag = 0.0, offdiag = 0.0;
  // dL/dC, then dL/dA with A = z1ᵀ z2.
  Matrix grad_a(d, d);
  std::vector<double> norm_coef(d, 0.0);  // Σ_j (dL/dC_ij) C_ij
  const double wd = terms.diagonal ? 1.0 : 0.0;
  const double wo = terms.off_diagonal ? lambda : 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double a1 = std::max(n1[i], eps);
    for (std::size_t j = 0; j < d; ++j) {
      const double cij = c(i, j);
      double gc;
      if (i == j) {
        diag += (1.0 - cij) * (1.0 - cij);
        gc = -2.0 * (1.0 - cij) * wd;
      } else {
        offdiag += cij * cij;
        gc = 2.0 * cij * wo;
      }
      grad_a(i, j) = gc / (a1 * std::max(n2[j], eps));
      norm_coef[i] += gc * cij;
    }
  }

  // dz1[b,i] = Σ_j z2[b,j] dA_ij  -  norm_coef_i z1[b,i] / n1_i²
  Matrix g = matmul_nt(z2, grad_a);
  for (std::size_t i = 0; i < d; ++i) {
    if (n1[i] <= eps) continue;
    const double k = norm_coef[i] / (n1[i] * n1[i]);
    for (std::size_t b = 0; b < z1.rows(); ++b) g(b, i) -= k * z1(b, i);
  }

  ValueWithGrad out;
  out.parts["diag"] = wd * diag;
  out.parts["offdiag"] = wo * offdiag;
  out.value = wd * diag + wo * offdiag;
  out.grads.emplace("z1", std::move(g));
  return out;
}

double rbf_kernel(std::span<const double> u, std::span<const double> v, double sigma) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("rbf_kernel: dimension mismatch " + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()));
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("rbf_kernel: sigma must be > 0");
  return std::exp(-squared_distance(u, v) / (sigma * sigma));
}

ValueWithGrad ldm(const Matrix& tq, const Matrix& tv, double sigma) {
  require_same_shape(tq, tv, "ldm");
  if (tq.rows() == 0) throw std::invalid_argument("ldm: empty input");
  if (!(sigma > 0.0)) throw std::invalid_argument("ldm: sigma must be > 0");
  const std::size_t n = tq.rows();
  const double inv_s2 = 1.0 / (sigma * sigma);

  // Exponents, then a log-sum-exp so far-apart points cannot underflow the sum.
  Matrix w(n, n);
  double top = -std::numeric_limits<double>::infinity();
  // Column-major sweep over tv: same per-pair summation order as squared_distance,
  // but the loop over j vectorises.
  const Matrix tvt = transpose(tv);
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < n; ++i) {
    distances_to_columns(tq.row(i).data(), tvt.data().data(), tq.cols(), n, acc.data());
    for (std::size_t j = 0; j < n; ++j) {
      w(i, j) = -acc[j] * inv_s2;
      top = std::max(top, w(i, j));
    }
  }
  double s = 0.0;
  for (double& v : w.data()) {
    v = std::exp(v - top);
    s += v;
  }
  for (double& v : w.data()) v /= s;  // softmax weights over all pairs

  ValueWithGrad out;
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  out.value = top + std::log(s) - std::log(nn);

  // d/dq_i = -2/σ² (rowsum_i q_i - (W V)_i);  d/dv_j = 2/σ² (Wᵀ Q)_j - colsum_j v_j)
  const Matrix wv = matmul(w, tv);
  const Matrix wq = matmul_tn(w, tq);
  Matrix gq(n, tq.cols()), gv(n, tv.cols());
  std::vector<double> colsum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      rowsum += w(i, j);
      colsum[j] += w(i, j);
    }
    for (std::size_t k = 0; k < tq.cols(); ++k)
      gq(i, k) = -2.0 * inv_s2 * (rowsum * tq(i, k) - wv(i, k));
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < tv.cols(); ++k)
      gv(j, k) = 2.0 * inv_s2 * (wq(j, k) - colsum[j] * tv(j, k));
  out.grads.emplace("tq", std::move(gq));
  out.grads.emplace("tv", std::move(gv));
  return out;
}

ValueWithGrad dcm_loss(const Matrix& t1, const Matrix& t2, double sigma, DcmTerms terms) {
  require_same_shape(t1, t2, "dcm_loss");
  ValueWithGrad out;
  Matrix g(t1.rows(), t1.cols());
  out.parts["self"] = 0.0;
  out.parts["cross"] = 0.0;
  if (terms.self) {
    const ValueWithGrad self = ldm(t1, t1, sigma);
    out.parts["self"] = self.value;
    const auto& a = self.grad("tq");
    const auto& b = self.grad("tv");
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += a.data()[i] + b.data()[i];
  }
  if (terms.cross) {
    const ValueWithGrad cross = ldm(t1, t2, sigma);
    out.parts["cross"] = cross.value;
    const auto& a = cross.grad("tq");
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += a.data()[i];
  }
  out.value = out.parts["self"] + out.parts["cross"];
  out.grads.emplace("t1", std::move(g));
  return out;
}

double overall_loss(double ce, double sem, double dcm, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("overall_loss: gamma must be >= 0");
  return ce + gamma * (sem + dcm);
}

ValueWithGrad feature_mse(const Matrix& t1, const Matrix& t2) {
  require_same_shape(t1, t2, "feature_mse");
  const double inv = t1.size() == 0 ? 0.0 : 1.0 / static_cast<double>(t1.size());
  Matrix g(t1.rows(), t1.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    const double d = t1.data()[i] - t2.data()[i];
    acc += d * d;
    g.data()[i] = 2.0 * d * inv;
  }
  ValueWithGrad out;
  out.value = acc * inv;
  out.grads.emplace("t1", std::move(g));
  return out;
}

Matrix center_columns(const Matrix& x) {
  Matrix out = x;
  if (x.rows() == 0) return out;
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) -= mean[c];
  return out;
}

Matrix center_columns_backward(const Matrix& grad_out) { return center_columns(grad_out); }

Matrix l2_normalize_rows(const Matrix& x, double eps) {
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = out.row(i);
    double s = 0.0;
    for (double v : r) s += v * v;
    const double n = std::max(std::sqrt(s), eps);
    for (double& v : r) v /= n;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& grad_out, double eps) {
  require_same_shape(x, grad_out, "l2_normalize_rows_backward");
  Matrix g(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xr = x.row(i);
    const auto go = grad_out.row(i);
    auto gr = g.row(i);
    double s = 0.0;
    for (double v : xr) s += v * v;
    const double n = std::sqrt(s);
    if (n <= eps) {
      for (std::size_t k = 0; k < xr.size(); ++k) gr[k] = go[k] / eps;
      continue;
    }
    double dot = 0.0;
    for (std::size_t k = 0; k < xr.size(); ++k) dot += xr[k] * go[k];
    const double inv = 1.0 / n;
    for (std::size_t k = 0; k < xr.size(); ++k)
      gr[k] = (go[k] - xr[k] * dot * inv * inv) * inv;
  }
  return g;
}

}  // namespace dskd
