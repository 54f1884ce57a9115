#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dskd/data.hpp"
#include "dskd/losses.hpp"
#include "dskd/model.hpp"

namespace dskd {

/// Student objective. kd_full stacks the logit-matching term on top of the full
/// structural objective.
enum class LossVariant { ce_only, kd, fitnets, gram, sem, dcm, full, kd_full };

std::string to_string(LossVariant v);
LossVariant variant_from_string(const std::string& s);
const std::vector<LossVariant>& all_variants();

/// Individually removable terms of the full objective.
enum class Term : std::uint8_t { SRM = 1, SEM1 = 2, SEM2 = 4, DCM1 = 8, DCM2 = 16 };

/// Set of terms removed from the full objective. Empty means all five are active.
class AblationMask {
 public:
  AblationMask() = default;
  AblationMask(std::initializer_list<Term> removed);

  bool removes(Term t) const noexcept { return (bits_ & static_cast<std::uint8_t>(t)) != 0; }
  bool empty() const noexcept { return bits_ == 0; }
  /// Comma-separated names, e.g. "SRM,DCM2"; empty string for no removals.
  std::string to_string() const;
  static AblationMask parse(const std::string& text);

  friend bool operator==(const AblationMask&, const AblationMask&) = default;

 private:
  std::uint8_t bits_ = 0;
};

const std::vector<Term>& all_terms();
std::string to_string(Term t);

/// Layer widths for teacher and student. Both projectors end in projection_dim.
struct ArchConfig {
  std::vector<std::size_t> teacher_encoder{256, 128};
  std::vector<std::size_t> student_encoder{64, 32};
  std::size_t projector_hidden = 128;
  std::size_t projection_dim = 256;
  std::size_t intermediate_tap = 0;

  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

struct TrainingConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double lr_init = 0.1;
  double lr_final = 1e-6;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  LossVariant variant = LossVariant::full;
  AblationMask ablation_mask;
  LossConfig loss;
  /// Row-normalise intermediate features before the distribution loss.
  bool normalize_intermediate = true;
  ArchConfig arch;
  /// Keep per-batch loss components in the report (large; off by default).
  bool record_batches = false;

  void validate() const;
};

/// Mean loss components of one epoch, keyed by name ("ce", "kd", "sem", "dcm", "mse",
/// "gram", "total"), plus the learning rate used.
struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::map<std::string, double> components;
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::map<std::string, double> components;
};

struct RunReport {
  std::string role;  ///< "teacher" or "student"
  TrainingConfig config;
  std::vector<EpochStats> epochs;
  std::vector<BatchRecord> batches;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t optimizer_steps = 0;
};

struct TrainResult {
  ModelParams model;
  RunReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Trains the teacher on the clean modality with cross-entropy only.
TrainResult train_teacher(const PairedDataset& ds, const TrainingConfig& cfg,
                          const EpochCallback& on_epoch = {});

/// Trains a student on the corrupted modality under cfg.variant. The teacher runs
/// forward on the paired clean rows and is never updated.
TrainResult distill_student(const PairedDataset& ds, const ModelParams& teacher,
                            const TrainingConfig& cfg, const EpochCallback& on_epoch = {});

/// Top-1 accuracy on one split; ties go to the lowest class index.
double evaluate(const ModelParams& model, const PairedDataset& ds, Split split, Modality modality);
double evaluate(const ModelParams& model, const Matrix& x, std::span<const int> labels);

struct RunRow {
  std::string label;  ///< variant name or ablation row name
  LossVariant variant = LossVariant::full;
  AblationMask mask;
  std::uint64_t seed = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct SummaryRow {
  std::string label;
  std::size_t runs = 0;
  double mean_test = 0.0;
  double std_test = 0.0;
  double mean_train = 0.0;
};

struct ComparisonTable {
  std::vector<RunRow> runs;         ///< label-major, seed-minor order
  std::vector<SummaryRow> summary;  ///< one per label, in request order
  const SummaryRow& row(const std::string& label) const;
};

/// One requested student run in a sweep.
struct SweepEntry {
  std::string label;
  LossVariant variant;
  AblationMask mask;
};

/// Runs every entry over seeds base..base+n_seeds-1, `jobs` runs at a time.
ComparisonTable sweep(const PairedDataset& ds, const ModelParams& teacher,
                      const TrainingConfig& base, const std::vector<SweepEntry>& entries,
                      std::size_t n_seeds, std::size_t jobs = 1);

ComparisonTable compare(const PairedDataset& ds, const ModelParams& teacher,
                        const TrainingConfig& base, const std::vector<LossVariant>& variants,
                        std::size_t n_seeds, std::size_t jobs = 1);

/// Full objective plus the five single-term removals, in the order
/// full, -SRM, -SEM1, -SEM2, -DCM1, -DCM2.
ComparisonTable ablate(const PairedDataset& ds, const ModelParams& teacher,
                       const TrainingConfig& cfg, std::size_t n_seeds, std::size_t jobs = 1);

// Serialisation (report_io.cpp). Reports omit wall time so reruns are byte-identical.
std::string report_to_json(const RunReport& report);
std::string table_to_json(const ComparisonTable& table);
/// Columns: label, variant, seed, train_acc, test_acc, wall_s.
std::string table_to_csv(const ComparisonTable& table);

/// Flat dotted-key view of a configuration, e.g. {"loss.gamma", "1"}.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues to_key_values(const TrainingConfig& cfg);
KeyValues to_key_values(const GenSpec& spec);
/// Applies one dotted key. Returns false if the key is not a TrainingConfig/GenSpec field.
bool apply_key_value(TrainingConfig& cfg, GenSpec& gen, const std::string& key,
                     const std::string& value);
std::vector<std::string> known_config_keys();

}  // namespace dskd
