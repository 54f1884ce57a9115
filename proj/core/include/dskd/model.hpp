#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dskd/numerics.hpp"

namespace dskd {

enum class Activation { relu, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::relu;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Layer stacks of one network: encoder f, projector g, classifier h, and an
/// optional linear adapter applied to the intermediate tap (student side only).
struct Architecture {
  std::vector<LayerSpec> encoder;
  std::vector<LayerSpec> projector;
  std::vector<LayerSpec> classifier;
  std::vector<LayerSpec> adapter;
  /// Index of the encoder layer whose post-activation output is the intermediate feature t.
  std::size_t intermediate_tap = 0;

  /// Throws std::invalid_argument if dimensions do not chain.
  void validate() const;
  std::size_t input_dim() const;
  std::size_t intermediate_dim() const;
  std::size_t embedding_dim() const;
  std::size_t projection_dim() const;
  std::size_t num_classes() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Sizes for the standard encoder → {projector, classifier} layout.
struct MlpShape {
  std::size_t input_dim = 100;
  std::vector<std::size_t> encoder_widths{256, 128};
  std::size_t projector_hidden = 128;
  std::size_t projection_dim = 256;
  std::size_t num_classes = 8;
  std::size_t intermediate_tap = 0;
  /// When set, a linear adapter maps t to this width (the teacher's intermediate width).
  std::optional<std::size_t> adapter_out;
};

Architecture make_architecture(const MlpShape& shape);
MlpShape default_teacher_shape(std::size_t input_dim, std::size_t num_classes);
MlpShape default_student_shape(std::size_t input_dim, std::size_t num_classes,
                               std::size_t teacher_intermediate_dim);

/// Weights are stored in_dim × out_dim so that y = x W + b.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
  Activation activation = Activation::relu;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ModelParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> projector;
  std::vector<DenseLayer> classifier;
  std::vector<DenseLayer> adapter;
  std::size_t intermediate_tap = 0;

  Architecture architecture() const;
  bool has_adapter() const noexcept { return !adapter.empty(); }
  std::size_t parameter_count() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// He-normal weights N(0, 2 / in_dim), zero biases. Draw order: encoder,
/// projector, classifier, adapter; each weight matrix row-major.
ModelParams init_params(const Architecture& arch, SeededRng& rng);

/// Same topology, every value zero.
ModelParams zeros_like(const ModelParams& p);

/// Per-layer inputs and post-activation outputs of one stack.
struct StackTrace {
  std::vector<Matrix> inputs;
  std::vector<Matrix> outputs;
};

struct ForwardTrace {
  StackTrace encoder, projector, classifier, adapter;
  std::size_t intermediate_tap = 0;
  Matrix t;          ///< intermediate features (encoder tap output)
  Matrix embedding;  ///< encoder output
  Matrix z;          ///< projected embedding
  Matrix logits;     ///< classifier output, not softmaxed
  Matrix adapted;    ///< adapter(t); empty when the model has no adapter
};

ForwardTrace forward(const ModelParams& params, const Matrix& x);

/// Encoder only, up to and including the tap (cheaper than a full trace).
Matrix intermediate_features(const ModelParams& params, const Matrix& x);
Matrix logits(const ModelParams& params, const Matrix& x);

/// Upstream gradients for any subset of the traced outputs. Gradients from
/// several sources are summed into the shared layers.
struct Upstream {
  std::optional<Matrix> logits;
  std::optional<Matrix> z;
  std::optional<Matrix> t;
  std::optional<Matrix> adapted;
  std::optional<Matrix> embedding;
};

/// Exact reverse-mode gradients of every parameter, shaped like `params`.
ModelParams backward(const ModelParams& params, const ForwardTrace& trace, const Upstream& up);

struct OptimizerState {
  ModelParams velocity;
  std::uint64_t steps = 0;
};

OptimizerState make_optimizer_state(const ModelParams& params);

struct SgdSettings {
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// v ← momentum·v + grad + weight_decay·param;  param ← param − lr·v.
void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& state,
              const SgdSettings& settings);

/// Cosine decay from lr_init at epoch 0 to lr_final at the last epoch.
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_init, double lr_final);

/// Applies `fn(span<double>)` to every weight and bias buffer in a fixed order.
template <typename Fn>
void for_each_buffer(ModelParams& p, Fn&& fn) {
  for (auto* stack : {&p.encoder, &p.projector, &p.classifier, &p.adapter}) {
    for (auto& layer : *stack) {
      fn(layer.weights.data());
      fn(std::span<double>(layer.bias));
    }
  }
}

template <typename Fn>
void for_each_buffer(const ModelParams& p, Fn&& fn) {
  for (auto* stack : {&p.encoder, &p.projector, &p.classifier, &p.adapter}) {
    for (const auto& layer : *stack) {
      fn(layer.weights.data());
      fn(std::span<const double>(layer.bias));
    }
  }
}

/// Model file: JSON with format_version, specs, intermediate_tap and parameters
/// written with 17 significant digits. load(save(m)) reproduces m bit-exactly.
std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(const std::string& text);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace dskd
