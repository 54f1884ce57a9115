#include "dskd/distill.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dskd {
namespace {

// Sub-stream ids for derive_seed.
constexpr std::uint64_t kTeacherInit = 1;
constexpr std::uint64_t kTeacherBatches = 2;
constexpr std::uint64_t kStudentInit = 3;
constexpr std::uint64_t kStudentBatches = 4;

const std::vector<std::pair<Term, const char*>>& term_names() {
  static const std::vector<std::pair<Term, const char*>> names = {
      {Term::SRM, "SRM"}, {Term::SEM1, "SEM1"}, {Term::SEM2, "SEM2"},
      {Term::DCM1, "DCM1"}, {Term::DCM2, "DCM2"}};
  return names;
}

bool uses_sem(LossVariant v) {
  return v == LossVariant::sem || v == LossVariant::full || v == LossVariant::kd_full;
}
bool uses_dcm(LossVariant v) {
  return v == LossVariant::dcm || v == LossVariant::full || v == LossVariant::kd_full;
}
bool uses_kd(LossVariant v) { return v == LossVariant::kd || v == LossVariant::kd_full; }
bool accepts_mask(LossVariant v) { return v == LossVariant::full || v == LossVariant::kd_full; }

std::vector<int> gather_labels(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(labels[i]);
  return out;
}

void accumulate(Matrix& acc, const Matrix& g, double scale) {
  if (acc.empty()) acc = Matrix(g.rows(), g.cols());
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += scale * g.data()[i];
}

void check_finite(double v, const char* what, std::size_t epoch) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("training diverged: non-finite ") + what + " in epoch " +
                             std::to_string(epoch));
  }
}

/// Shared epoch loop: `step` computes loss components and parameter gradients for one batch.
template <typename Step>
RunReport run_training(ModelParams& model, const PairedDataset& ds, const TrainingConfig& cfg,
                       std::uint64_t batch_seed, const EpochCallback& on_epoch, Step&& step) {
  RunReport report;
  report.config = cfg;
  OptimizerState opt = make_optimizer_state(model);
  SeededRng batch_rng(batch_seed);
  const auto train_idx = ds.indices(Split::train);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_init, cfg.lr_final);
    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr;
    const auto blocks = batches(train_idx, cfg.batch_size, batch_rng);
    for (const auto& block : blocks) {
      std::map<std::string, double> parts;
      const ModelParams grads = step(block, parts);
      for (const auto& [k, v] : parts) {
        check_finite(v, k.c_str(), epoch);
        stats.components[k] += v;
      }
      if (cfg.record_batches) report.batches.push_back({epoch, parts});
      sgd_step(model, grads, opt, {lr, cfg.momentum, cfg.weight_decay});
    }
    for (auto& [k, v] : stats.components) v /= static_cast<double>(blocks.size());
    if (on_epoch) on_epoch(stats);
    report.epochs.push_back(std::move(stats));
  }
  report.optimizer_steps = opt.steps;
  return report;
}

/// Teacher outputs for every row of the clean modality, computed once.
struct TeacherCache {
  Matrix t;  ///< intermediate features (row-normalised when configured)
  Matrix z;
  Matrix logits;
};

TeacherCache cache_teacher(const ModelParams& teacher, const PairedDataset& ds,
                           const TrainingConfig& cfg) {
  const ForwardTrace tr = forward(teacher, ds.x_m2);
  TeacherCache c{tr.t, tr.z, tr.logits};
  if (cfg.normalize_intermediate) c.t = l2_normalize_rows(c.t, cfg.loss.eps);
  return c;
}

}  // namespace

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::ce_only: return "ce_only";
    case LossVariant::kd: return "kd";
    case LossVariant::fitnets: return "fitnets";
    case LossVariant::gram: return "gram";
    case LossVariant::sem: return "sem";
    case LossVariant::dcm: return "dcm";
    case LossVariant::full: return "full";
    case LossVariant::kd_full: return "kd_full";
  }
  return "?";
}

LossVariant variant_from_string(const std::string& s) {
  for (auto v : all_variants())
    if (to_string(v) == s) return v;
  throw std::invalid_argument(
      "unknown loss variant '" + s + "' (expected ce_only, kd, fitnets, gram, sem, dcm, full, kd_full)");
}

const std::vector<LossVariant>& all_variants() {
  static const std::vector<LossVariant> v = {LossVariant::ce_only, LossVariant::kd,
                                             LossVariant::fitnets, LossVariant::gram,
                                             LossVariant::sem,     LossVariant::dcm,
                                             LossVariant::full,    LossVariant::kd_full};
  return v;
}

AblationMask::AblationMask(std::initializer_list<Term> removed) {
  for (Term t : removed) bits_ |= static_cast<std::uint8_t>(t);
}

std::string AblationMask::to_string() const {
  std::string out;
  for (const auto& [t, name] : term_names()) {
    if (!removes(t)) continue;
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

AblationMask AblationMask::parse(const std::string& text) {
  AblationMask m;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    bool found = false;
    for (const auto& [t, name] : term_names()) {
      if (tok == name) {
        m.bits_ |= static_cast<std::uint8_t>(t);
        found = true;
      }
    }
    if (!found) {
      throw std::invalid_argument("unknown ablation term '" + tok +
                                  "' (expected SRM, SEM1, SEM2, DCM1, DCM2)");
    }
  }
  return m;
}

const std::vector<Term>& all_terms() {
  static const std::vector<Term> t = {Term::SRM, Term::SEM1, Term::SEM2, Term::DCM1, Term::DCM2};
  return t;
}

std::string to_string(Term t) {
  for (const auto& [term, name] : term_names())
    if (term == t) return name;
  return "?";
}

void TrainingConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainingConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainingConfig: batch_size must be >= 1");
  if (!(lr_init > 0.0) || !(lr_final >= 0.0)) {
    throw std::invalid_argument("TrainingConfig: learning rates must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("TrainingConfig: momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainingConfig: weight_decay must be >= 0");
  if (!ablation_mask.empty() && !accepts_mask(variant)) {
    throw std::invalid_argument("TrainingConfig: ablation_mask '" + ablation_mask.to_string() +
                                "' is only meaningful with the full (or kd_full) variant, not " +
                                to_string(variant));
  }
  if (arch.teacher_encoder.empty() || arch.student_encoder.empty()) {
    throw std::invalid_argument("TrainingConfig: encoders need at least one layer");
  }
  if (arch.intermediate_tap >= arch.teacher_encoder.size() ||
      arch.intermediate_tap >= arch.student_encoder.size()) {
    throw std::invalid_argument("TrainingConfig: intermediate_tap outside an encoder");
  }
  loss.validate();
}

TrainResult train_teacher(const PairedDataset& ds, const TrainingConfig& cfg_in,
                          const EpochCallback& on_epoch) {
  TrainingConfig cfg = cfg_in;
  cfg.variant = LossVariant::ce_only;
  cfg.ablation_mask = {};
  cfg.validate();
  ds.validate();
  const auto start = std::chrono::steady_clock::now();

  MlpShape shape = default_teacher_shape(ds.dim(), ds.num_classes);
  shape.encoder_widths = cfg.arch.teacher_encoder;
  shape.projector_hidden = cfg.arch.projector_hidden;
  shape.projection_dim = cfg.arch.projection_dim;
  shape.intermediate_tap = cfg.arch.intermediate_tap;
  SeededRng init_rng(derive_seed(cfg.seed, kTeacherInit));
  TrainResult out;
  out.model = init_params(make_architecture(shape), init_rng);

  out.report = run_training(
      out.model, ds, cfg, derive_seed(cfg.seed, kTeacherBatches), on_epoch,
      [&](const std::vector<std::size_t>& block, std::map<std::string, double>& parts) {
        const Matrix x = gather_rows(ds.x_m2, block);
        const auto y = gather_labels(ds.labels, block);
        const ForwardTrace tr = forward(out.model, x);
        ValueWithGrad ce = softmax_cross_entropy(tr.logits, y);
        parts["ce"] = ce.value;
        parts["total"] = ce.value;
        Upstream up;
        up.logits = std::move(ce.grads.at("logits"));
        return backward(out.model, tr, up);
      });
  out.report.role = "teacher";
  out.report.train_accuracy = evaluate(out.model, ds, Split::train, Modality::m2);
  out.report.test_accuracy = evaluate(out.model, ds, Split::test, Modality::m2);
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

TrainResult distill_student(const PairedDataset& ds, const ModelParams& teacher,
                            const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  ds.validate();
  const auto start = std::chrono::steady_clock::now();
  const Architecture tarch = teacher.architecture();
  if (tarch.input_dim() != ds.dim()) {
    throw std::invalid_argument("distill_student: teacher input width " +
                                std::to_string(tarch.input_dim()) + " does not match data width " +
                                std::to_string(ds.dim()));
  }
  if (tarch.projection_dim() != cfg.arch.projection_dim) {
    throw std::invalid_argument("distill_student: teacher projector output " +
                                std::to_string(tarch.projection_dim()) +
                                " differs from student projector output " +
                                std::to_string(cfg.arch.projection_dim));
  }
  if (tarch.num_classes() != ds.num_classes) {
    throw std::invalid_argument("distill_student: teacher has " + std::to_string(tarch.num_classes()) +
                                " classes, data has " + std::to_string(ds.num_classes));
  }

  MlpShape shape = default_student_shape(ds.dim(), ds.num_classes, tarch.intermediate_dim());
  shape.encoder_widths = cfg.arch.student_encoder;
  shape.projector_hidden = cfg.arch.projector_hidden;
  shape.projection_dim = cfg.arch.projection_dim;
  shape.intermediate_tap = cfg.arch.intermediate_tap;
  SeededRng init_rng(derive_seed(cfg.seed, kStudentInit));
  TrainResult out;
  out.model = init_params(make_architecture(shape), init_rng);

  const TeacherCache tc = cache_teacher(teacher, ds, cfg);
  const LossVariant v = cfg.variant;
  const LossConfig& lc = cfg.loss;
  const AblationMask& mask = cfg.ablation_mask;
  const bool structural_grads = lc.gamma > 0.0;

  out.report = run_training(
      out.model, ds, cfg, derive_seed(cfg.seed, kStudentBatches), on_epoch,
      [&](const std::vector<std::size_t>& block, std::map<std::string, double>& parts) {
        const Matrix x = gather_rows(ds.x_m1, block);
        const auto y = gather_labels(ds.labels, block);
        const ForwardTrace tr = forward(out.model, x);
        Upstream up;
        Matrix d_logits, d_z, d_adapted;
        double total = 0.0;

        if (!mask.removes(Term::SRM)) {
          const ValueWithGrad ce = softmax_cross_entropy(tr.logits, y);
          parts["ce"] = ce.value;
          total += ce.value;
          accumulate(d_logits, ce.grad("logits"), 1.0);
        } else {
          parts["ce"] = 0.0;
        }

        if (uses_kd(v)) {
          const Matrix t_logits = gather_rows(tc.logits, block);
          const ValueWithGrad kd = kd_logit_divergence(tr.logits, t_logits, lc.tau);
          const double scale = lc.tau * lc.tau;
          parts["kd"] = scale * kd.value;
          total += scale * kd.value;
          accumulate(d_logits, kd.grad("logits"), scale);
        }

        // Student intermediate as seen by the feature losses: adapted (and normalised) t.
        const Matrix& t_raw = out.model.has_adapter() ? tr.adapted : tr.t;
        const bool need_t = v == LossVariant::fitnets || uses_dcm(v);
        Matrix t_student;
        if (need_t) {
          t_student = (uses_dcm(v) && cfg.normalize_intermediate) ? l2_normalize_rows(t_raw, lc.eps) : t_raw;
        }
        Matrix d_t_student;

        double structural = 0.0;
        if (v == LossVariant::fitnets) {
          // Hint loss on the raw adapted features against the raw teacher tap.
          const Matrix t_teacher = intermediate_features(teacher, gather_rows(ds.x_m2, block));
          const ValueWithGrad mse = feature_mse(t_raw, t_teacher);
          parts["mse"] = mse.value;
          structural += mse.value;
          if (structural_grads) accumulate(d_t_student, mse.grad("t1"), lc.gamma);
        }
        // Optional per-batch column centering of both projections (sem and gram only).
        Matrix z_student, z_teacher;
        if (v == LossVariant::gram || uses_sem(v)) {
          z_student = lc.center ? center_columns(tr.z) : tr.z;
          z_teacher = gather_rows(tc.z, block);
          if (lc.center) z_teacher = center_columns(z_teacher);
        }
        const auto z_back = [&](const Matrix& g) { return lc.center ? center_columns_backward(g) : g; };
        if (v == LossVariant::gram) {
          const ValueWithGrad g = gram_divergence(z_student, z_teacher);
          parts["gram"] = g.value;
          structural += g.value;
          if (structural_grads) accumulate(d_z, z_back(g.grad("z1")), lc.gamma);
        }
        if (uses_sem(v)) {
          const SemTerms terms{!mask.removes(Term::SEM1), !mask.removes(Term::SEM2)};
          const ValueWithGrad s = sem_loss(z_student, z_teacher, lc.lambda, lc.eps, terms);
          parts["sem"] = s.value;
          structural += s.value;
          if (structural_grads) accumulate(d_z, z_back(s.grad("z1")), lc.gamma);
        }
        if (uses_dcm(v)) {
          const DcmTerms terms{!mask.removes(Term::DCM1), !mask.removes(Term::DCM2)};
          const ValueWithGrad d = dcm_loss(t_student, gather_rows(tc.t, block), lc.sigma, terms);
          parts["dcm"] = d.value;
          structural += d.value;
          if (structural_grads) {
            Matrix g = d.grad("t1");
            if (cfg.normalize_intermediate) g = l2_normalize_rows_backward(t_raw, g, lc.eps);
            accumulate(d_t_student, g, lc.gamma);
          }
        }
        total += lc.gamma * structural;
        parts["total"] = total;

        if (!d_logits.empty()) up.logits = std::move(d_logits);
        if (!d_z.empty()) up.z = std::move(d_z);
        if (!d_t_student.empty()) {
          if (out.model.has_adapter()) up.adapted = std::move(d_t_student);
          else up.t = std::move(d_t_student);
        }
        return backward(out.model, tr, up);
      });
  out.report.role = "student";
  out.report.train_accuracy = evaluate(out.model, ds, Split::train, Modality::m1);
  out.report.test_accuracy = evaluate(out.model, ds, Split::test, Modality::m1);
  out.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double evaluate(const ModelParams& model, const Matrix& x, std::span<const int> labels) {
  if (x.rows() != labels.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(x.rows()) + " rows but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (model.encoder.empty() || x.cols() != model.encoder.front().weights.rows()) {
    throw std::invalid_argument("evaluate: model input width does not match data " + x.shape_string());
  }
  if (labels.empty()) return 0.0;
  const Matrix out = logits(model, x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const auto r = out.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < r.size(); ++k)
      if (r[k] > r[best]) best = k;
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double evaluate(const ModelParams& model, const PairedDataset& ds, Split split, Modality modality) {
  const auto idx = ds.indices(split);
  return evaluate(model, gather_rows(ds.features(modality), idx), gather_labels(ds.labels, idx));
}

const SummaryRow& ComparisonTable::row(const std::string& label) const {
  for (const auto& r : summary)
    if (r.label == label) return r;
  throw std::out_of_range("comparison table has no row '" + label + "'");
}

ComparisonTable sweep(const PairedDataset& ds, const ModelParams& teacher,
                      const TrainingConfig& base, const std::vector<SweepEntry>& entries,
                      std::size_t n_seeds, std::size_t jobs) {
  if (n_seeds < 1) throw std::invalid_argument("sweep: n_seeds must be >= 1");
  ComparisonTable table;
  for (const auto& e : entries) {
    for (std::size_t s = 0; s < n_seeds; ++s) {
      RunRow r;
      r.label = e.label;
      r.variant = e.variant;
      r.mask = e.mask;
      r.seed = base.seed + s;
      table.runs.push_back(r);
    }
  }
  // Validate every configuration up front so a bad entry fails before any training.
  for (const auto& r : table.runs) {
    TrainingConfig cfg = base;
    cfg.variant = r.variant;
    cfg.ablation_mask = r.mask;
    cfg.validate();
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < table.runs.size(); i = next++) {
      try {
        RunRow& r = table.runs[i];
        TrainingConfig cfg = base;
        cfg.variant = r.variant;
        cfg.ablation_mask = r.mask;
        cfg.seed = r.seed;
        cfg.record_batches = false;
        const TrainResult res = distill_student(ds, teacher, cfg);
        r.train_accuracy = res.report.train_accuracy;
        r.test_accuracy = res.report.test_accuracy;
        r.wall_seconds = res.report.wall_seconds;
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, table.runs.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const auto& e : entries) {
    SummaryRow s;
    s.label = e.label;
    std::vector<double> acc;
    for (const auto& r : table.runs) {
      if (r.label != e.label) continue;
      acc.push_back(r.test_accuracy);
      s.mean_train += r.train_accuracy;
    }
    s.runs = acc.size();
    s.mean_test = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    s.mean_train /= static_cast<double>(acc.size());
    double var = 0.0;
    for (double a : acc) var += (a - s.mean_test) * (a - s.mean_test);
    s.std_test = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
    table.summary.push_back(s);
  }
  return table;
}

ComparisonTable compare(const PairedDataset& ds, const ModelParams& teacher,
                        const TrainingConfig& base, const std::vector<LossVariant>& variants,
                        std::size_t n_seeds, std::size_t jobs) {
  std::vector<SweepEntry> entries;
  for (auto v : variants) entries.push_back({to_string(v), v, {}});
  return sweep(ds, teacher, base, entries, n_seeds, jobs);
}

ComparisonTable ablate(const PairedDataset& ds, const ModelParams& teacher,
                       const TrainingConfig& cfg, std::size_t n_seeds, std::size_t jobs) {
  if (cfg.variant != LossVariant::full) {
    throw std::invalid_argument("ablate: requires the full variant, got " + to_string(cfg.variant));
  }
  std::vector<SweepEntry> entries{{"full", LossVariant::full, {}}};
  for (Term t : all_terms()) entries.push_back({"-" + to_string(t), LossVariant::full, AblationMask{t}});
  return sweep(ds, teacher, cfg, entries, n_seeds, jobs);
}

}  // namespace dskd
