#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dskd/numerics.hpp"

namespace dskd {

/// Free hyperparameters of the distillation objective.
struct LossConfig {
  double lambda = 5e-3;  ///< weight of the off-diagonal redundancy term
  double gamma = 1.0;    ///< weight of the structural terms against supervision
  double tau = 4.0;      ///< softmax temperature for softened class scores
  double sigma = 1.0;    ///< RBF bandwidth
  double eps = 1e-12;    ///< column/row norm guard
  /// Subtract per-column batch means from both projections before the cross-correlation.
  bool center = false;

  /// Throws std::invalid_argument naming the first violated bound.
  void validate() const;
};

/// A scalar loss with gradients keyed by the role of each differentiable input
/// ("probs", "logits", "student", "z1", "t1", "tq", "tv").
struct ValueWithGrad {
  double value = 0.0;
  std::map<std::string, Matrix, std::less<>> grads;
  /// Named partial terms (e.g. "diag"/"offdiag" for the redundancy loss).
  std::map<std::string, double, std::less<>> parts;

  const Matrix& grad(std::string_view role) const;
};

/// Cross-correlation between two batches of embeddings, d × d.
struct CrossCorrMatrix {
  Matrix c;
  std::size_t dim() const noexcept { return c.rows(); }
};

// Floor applied inside every log so hard zeros saturate instead of producing -inf.
inline constexpr double kLogFloor = 1e-300;

/// Mean negative log-probability of the labelled class. Gradient w.r.t. probs.
ValueWithGrad cross_entropy(const Matrix& probs, std::span<const int> labels);

/// Softmax followed by cross-entropy, differentiated w.r.t. the raw logits.
ValueWithGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Row-wise softmax of logits / tau, stabilised by subtracting the row max.
Matrix soften(const Matrix& logits, double tau);

/// Mean over rows of KL(teacher || student). The teacher is treated as constant;
/// the gradient is w.r.t. the student probabilities ("student").
ValueWithGrad kd_divergence(const Matrix& p_student, const Matrix& p_teacher);

/// KL(soften(teacher, tau) || soften(student, tau)) with the gradient pushed back
/// to the student logits ("logits"). No tau² rescaling is applied here.
ValueWithGrad kd_logit_divergence(const Matrix& student_logits, const Matrix& teacher_logits,
                                  double tau);

/// Mean squared difference of the two d × d Gram matrices z1ᵀz1 and z2ᵀz2.
/// Gradient w.r.t. z1 only.
ValueWithGrad gram_divergence(const Matrix& z1, const Matrix& z2);

/// Column-normalised cross-correlation: C_ij = <z1_i, z2_j> / (max(|z1_i|,eps) max(|z2_j|,eps)).
CrossCorrMatrix cross_correlation(const Matrix& z1, const Matrix& z2, double eps);

/// Which halves of the redundancy-reduction loss are active.
struct SemTerms {
  bool diagonal = true;
  bool off_diagonal = true;
};

/// Σ_i (1 - C_ii)² + λ Σ_{i≠j} C_ij², gradient w.r.t. z1 (z2 is the frozen teacher side).
/// parts: "diag", "offdiag" (already multiplied by λ).
ValueWithGrad sem_loss(const Matrix& z1, const Matrix& z2, double lambda, double eps,
                       SemTerms terms = {});

/// exp(-|u - v|² / σ²).
double rbf_kernel(std::span<const double> u, std::span<const double> v, double sigma);

/// log of the mean RBF kernel over all N² row pairs of tq and tv. Gradients are
/// returned separately for both inputs ("tq", "tv"); when tq and tv are the same
/// tensor the caller adds them.
ValueWithGrad ldm(const Matrix& tq, const Matrix& tv, double sigma);

struct DcmTerms {
  bool self = true;   ///< ldm(t1, t1)
  bool cross = true;  ///< ldm(t1, t2)
};

/// ldm(t1, t1) + ldm(t1, t2), gradient w.r.t. t1 only. parts: "self", "cross".
ValueWithGrad dcm_loss(const Matrix& t1, const Matrix& t2, double sigma, DcmTerms terms = {});

/// ce + γ (sem + dcm).
double overall_loss(double ce, double sem, double dcm, double gamma);

/// Mean squared element-wise difference, gradient w.r.t. t1.
ValueWithGrad feature_mse(const Matrix& t1, const Matrix& t2);

/// Subtracts each column's mean over the rows.
Matrix center_columns(const Matrix& x);
/// Vector-Jacobian product of center_columns (the map is linear and self-adjoint).
Matrix center_columns_backward(const Matrix& grad_out);

/// Scales each row to unit L2 norm (rows with norm ≤ eps are left divided by eps).
Matrix l2_normalize_rows(const Matrix& x, double eps);
/// Vector-Jacobian product of l2_normalize_rows at x.
Matrix l2_normalize_rows_backward(const Matrix& x, const Matrix& grad_out, double eps);

}  // namespace dskd
