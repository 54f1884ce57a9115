#include "dskd/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dskd {
namespace {

void validate_chain(const std::vector<LayerSpec>& stack, std::size_t in, const char* name) {
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& l = stack[i];
    if (l.in_dim == 0 || l.out_dim == 0) {
      throw std::invalid_argument(std::string(name) + " layer " + std::to_string(i) +
                                  ": dimensions must be >= 1");
    }
    if (l.in_dim != in) {
      throw std::invalid_argument(std::string(name) + " layer " + std::to_string(i) +
                                  ": in_dim " + std::to_string(l.in_dim) +
                                  " does not match previous width " + std::to_string(in));
    }
    in = l.out_dim;
  }
}

std::vector<DenseLayer> init_stack(const std::vector<LayerSpec>& specs, SeededRng& rng) {
  std::vector<DenseLayer> out;
  out.reserve(specs.size());
  for (const auto& s : specs) {
    DenseLayer layer{Matrix(s.in_dim, s.out_dim), std::vector<double>(s.out_dim, 0.0),
                     s.activation};
    const double scale = std::sqrt(2.0 / static_cast<double>(s.in_dim));
    for (double& w : layer.weights.data()) w = scale * rng.normal();
    out.push_back(std::move(layer));
  }
  return out;
}

std::vector<LayerSpec> specs_of(const std::vector<DenseLayer>& stack) {
  std::vector<LayerSpec> out;
  out.reserve(stack.size());
  for (const auto& l : stack) out.push_back({l.weights.rows(), l.weights.cols(), l.activation});
  return out;
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
  if (x.cols() != layer.weights.rows()) {
    throw std::invalid_argument("forward: input " + x.shape_string() +
                                " does not match layer weights " + layer.weights.shape_string());
  }
  Matrix y = matmul(x, layer.weights);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double v = r[j] + layer.bias[j];
      r[j] = (layer.activation == Activation::relu && v < 0.0) ? 0.0 : v;
    }
  }
  return y;
}

Matrix run_stack(const std::vector<DenseLayer>& stack, Matrix x, StackTrace* trace) {
  for (const auto& layer : stack) {
    Matrix y = dense_forward(layer, x);
    if (trace) {
      trace->inputs.push_back(std::move(x));
      trace->outputs.push_back(y);
    }
    x = std::move(y);
  }
  return x;
}

void add_into(Matrix& acc, const Matrix& g, const char* what) {
  if (acc.empty()) {
    acc = g;
    return;
  }
  if (!acc.same_shape(g)) {
    throw std::invalid_argument(std::string("backward: upstream ") + what + " has shape " +
                                g.shape_string() + ", expected " + acc.shape_string());
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += g.data()[i];
}

// Backpropagates through layers [0, stack.size()) of one stack. `inject` lets the
// encoder add the intermediate-tap gradient before processing a given layer.
// Returns the gradient w.r.t. the stack input (empty when not needed).
template <typename Inject>
Matrix backprop_stack(const std::vector<DenseLayer>& stack, const StackTrace& trace,
                      Matrix d_out, std::vector<DenseLayer>& grads, bool need_input_grad,
                      Inject&& inject) {
  if (trace.outputs.size() != stack.size() || trace.inputs.size() != stack.size()) {
    throw std::invalid_argument("backward: trace does not match model topology");
  }
  for (std::size_t li = stack.size(); li-- > 0;) {
    inject(li, d_out);
    if (d_out.empty()) continue;
    const auto& layer = stack[li];
    const Matrix& out = trace.outputs[li];
    if (layer.activation == Activation::relu) {
      for (std::size_t i = 0; i < d_out.size(); ++i)
        if (!(out.data()[i] > 0.0)) d_out.data()[i] = 0.0;
    }
    auto& g = grads[li];
    const Matrix dw = matmul_tn(trace.inputs[li], d_out);
    for (std::size_t i = 0; i < dw.size(); ++i) g.weights.data()[i] += dw.data()[i];
    for (std::size_t r = 0; r < d_out.rows(); ++r) {
      const auto row = d_out.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) g.bias[j] += row[j];
    }
    if (li > 0 || need_input_grad) {
      d_out = matmul_nt(d_out, layer.weights);
    } else {
      d_out = Matrix();
    }
  }
  return d_out;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

void Architecture::validate() const {
  if (encoder.empty()) throw std::invalid_argument("architecture: encoder has no layers");
  if (projector.empty()) throw std::invalid_argument("architecture: projector has no layers");
  if (classifier.empty()) throw std::invalid_argument("architecture: classifier has no layers");
  validate_chain(encoder, encoder.front().in_dim, "encoder");
  if (intermediate_tap >= encoder.size()) {
    throw std::invalid_argument("architecture: intermediate_tap " +
                                std::to_string(intermediate_tap) + " outside encoder of " +
                                std::to_string(encoder.size()) + " layers");
  }
  validate_chain(projector, embedding_dim(), "projector");
  validate_chain(classifier, embedding_dim(), "classifier");
  if (!adapter.empty()) validate_chain(adapter, intermediate_dim(), "adapter");
}

std::size_t Architecture::input_dim() const { return encoder.front().in_dim; }
std::size_t Architecture::intermediate_dim() const { return encoder.at(intermediate_tap).out_dim; }
std::size_t Architecture::embedding_dim() const { return encoder.back().out_dim; }
std::size_t Architecture::projection_dim() const { return projector.back().out_dim; }
std::size_t Architecture::num_classes() const { return classifier.back().out_dim; }

Architecture make_architecture(const MlpShape& shape) {
  Architecture a;
  std::size_t in = shape.input_dim;
  for (std::size_t w : shape.encoder_widths) {
    a.encoder.push_back({in, w, Activation::relu});
    in = w;
  }
  if (shape.projector_hidden > 0) {
    a.projector.push_back({in, shape.projector_hidden, Activation::relu});
    a.projector.push_back({shape.projector_hidden, shape.projection_dim, Activation::identity});
  } else {
    a.projector.push_back({in, shape.projection_dim, Activation::identity});
  }
  a.classifier.push_back({in, shape.num_classes, Activation::identity});
  a.intermediate_tap = shape.intermediate_tap;
  if (shape.adapter_out) {
    if (shape.intermediate_tap >= shape.encoder_widths.size()) {
      throw std::invalid_argument("make_architecture: intermediate_tap outside encoder");
    }
    a.adapter.push_back(
        {shape.encoder_widths[shape.intermediate_tap], *shape.adapter_out, Activation::identity});
  }
  a.validate();
  return a;
}

MlpShape default_teacher_shape(std::size_t input_dim, std::size_t num_classes) {
  MlpShape s;
  s.input_dim = input_dim;
  s.encoder_widths = {256, 128};
  s.num_classes = num_classes;
  return s;
}

MlpShape default_student_shape(std::size_t input_dim, std::size_t num_classes,
                               std::size_t teacher_intermediate_dim) {
  MlpShape s;
  s.input_dim = input_dim;
  s.encoder_widths = {64, 32};
  s.num_classes = num_classes;
  s.adapter_out = teacher_intermediate_dim;
  return s;
}

Architecture ModelParams::architecture() const {
  Architecture a;
  a.encoder = specs_of(encoder);
  a.projector = specs_of(projector);
  a.classifier = specs_of(classifier);
  a.adapter = specs_of(adapter);
  a.intermediate_tap = intermediate_tap;
  return a;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_buffer(*this, [&](std::span<const double> b) { n += b.size(); });
  return n;
}

ModelParams init_params(const Architecture& arch, SeededRng& rng) {
  arch.validate();
  ModelParams p;
  p.encoder = init_stack(arch.encoder, rng);
  p.projector = init_stack(arch.projector, rng);
  p.classifier = init_stack(arch.classifier, rng);
  p.adapter = init_stack(arch.adapter, rng);
  p.intermediate_tap = arch.intermediate_tap;
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for_each_buffer(z, [](std::span<double> b) { std::fill(b.begin(), b.end(), 0.0); });
  return z;
}

ForwardTrace forward(const ModelParams& params, const Matrix& x) {
  if (params.encoder.empty()) throw std::invalid_argument("forward: model has no encoder");
  ForwardTrace tr;
  tr.intermediate_tap = params.intermediate_tap;
  tr.embedding = run_stack(params.encoder, x, &tr.encoder);
  tr.t = tr.encoder.outputs.at(params.intermediate_tap);
  tr.z = run_stack(params.projector, tr.embedding, &tr.projector);
  tr.logits = run_stack(params.classifier, tr.embedding, &tr.classifier);
  if (params.has_adapter()) tr.adapted = run_stack(params.adapter, tr.t, &tr.adapter);
  return tr;
}

Matrix intermediate_features(const ModelParams& params, const Matrix& x) {
  Matrix h = x;
  for (std::size_t i = 0; i <= params.intermediate_tap; ++i) h = dense_forward(params.encoder.at(i), h);
  return h;
}

Matrix logits(const ModelParams& params, const Matrix& x) {
  return run_stack(params.classifier, run_stack(params.encoder, x, nullptr), nullptr);
}

ModelParams backward(const ModelParams& params, const ForwardTrace& trace, const Upstream& up) {
  ModelParams grads = zeros_like(params);
  auto none = [](std::size_t, Matrix&) {};

  Matrix d_embedding;
  if (up.embedding) add_into(d_embedding, *up.embedding, "embedding");
  if (up.logits) {
    if (trace.logits.empty()) throw std::invalid_argument("backward: trace has no logits");
    add_into(d_embedding,
             backprop_stack(params.classifier, trace.classifier, *up.logits, grads.classifier,
                            true, none),
             "logits");
  }
  if (up.z) {
    if (trace.z.empty()) throw std::invalid_argument("backward: trace has no z");
    add_into(d_embedding,
             backprop_stack(params.projector, trace.projector, *up.z, grads.projector, true, none),
             "z");
  }

  Matrix d_t;
  if (up.t) add_into(d_t, *up.t, "t");
  if (up.adapted) {
    if (!params.has_adapter() || trace.adapted.empty()) {
      throw std::invalid_argument("backward: adapter gradient supplied but trace has no adapter output");
    }
    add_into(d_t, backprop_stack(params.adapter, trace.adapter, *up.adapted, grads.adapter, true, none),
             "adapted");
  }

  if (d_embedding.empty() && d_t.empty()) return grads;
  if (trace.encoder.outputs.empty()) throw std::invalid_argument("backward: trace has no encoder activations");
  const std::size_t tap = params.intermediate_tap;
  backprop_stack(params.encoder, trace.encoder, std::move(d_embedding), grads.encoder, false,
                 [&](std::size_t li, Matrix& d_out) {
                   if (li == tap && !d_t.empty()) {
                     if (d_out.empty()) d_out = Matrix(d_t.rows(), d_t.cols());
                     add_into(d_out, d_t, "t");
                   }
                 });
  return grads;
}

OptimizerState make_optimizer_state(const ModelParams& params) {
  return OptimizerState{zeros_like(params), 0};
}

void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& state,
              const SgdSettings& s) {
  if (!(params.architecture() == grads.architecture()) ||
      !(params.architecture() == state.velocity.architecture())) {
    throw std::invalid_argument("sgd_step: parameter, gradient and velocity shapes differ");
  }
  std::vector<std::span<double>> p, v;
  std::vector<std::span<const double>> g;
  for_each_buffer(params, [&](std::span<double> b) { p.push_back(b); });
  for_each_buffer(state.velocity, [&](std::span<double> b) { v.push_back(b); });
  for_each_buffer(grads, [&](std::span<const double> b) { g.push_back(b); });
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      v[k][i] = s.momentum * v[k][i] + g[k][i] + s.weight_decay * p[k][i];
      p[k][i] -= s.lr * v[k][i];
    }
  }
  ++state.steps;
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_init, double lr_final) {
  if (total_epochs == 0 || epoch >= total_epochs) {
    throw std::invalid_argument("cosine_lr: epoch " + std::to_string(epoch) + " outside [0, " +
                                std::to_string(total_epochs) + ")");
  }
  if (total_epochs == 1) return lr_init;
  const double phase = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return lr_final + 0.5 * (lr_init - lr_final) * (1.0 + std::cos(std::numbers::pi * phase));
}

}  // namespace dskd
