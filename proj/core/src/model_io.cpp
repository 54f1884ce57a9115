#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dskd/model.hpp"
#include "json.hpp"

namespace dskd {
namespace {

constexpr int kFormatVersion = 1;

// nlohmann emits shortest round-trip decimals; the model file promises 17
// significant digits, so numbers are formatted here and only parsing is delegated.
void put_double(std::ostream& os, double v) {
  if (!std::isfinite(v)) throw std::runtime_error("model_to_json: non-finite parameter");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void put_specs(std::ostream& os, const std::vector<DenseLayer>& stack) {
  os << '[';
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& l = stack[i];
    if (i) os << ", ";
    os << "{\"in_dim\": " << l.weights.rows() << ", \"out_dim\": " << l.weights.cols()
       << ", \"activation\": \"" << to_string(l.activation) << "\"}";
  }
  os << ']';
}

void put_stack(std::ostream& os, const std::vector<DenseLayer>& stack) {
  os << '[';
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const auto& l = stack[i];
    os << (i ? ",\n      " : "\n      ") << "{\"weights\": [";
    for (std::size_t r = 0; r < l.weights.rows(); ++r) {
      os << (r ? ",\n        [" : "\n        [");
      for (std::size_t c = 0; c < l.weights.cols(); ++c) {
        if (c) os << ", ";
        put_double(os, l.weights(r, c));
      }
      os << ']';
    }
    os << "],\n       \"bias\": [";
    for (std::size_t j = 0; j < l.bias.size(); ++j) {
      if (j) os << ", ";
      put_double(os, l.bias[j]);
    }
    os << "]}";
  }
  os << (stack.empty() ? "]" : "\n    ]");
}

std::vector<DenseLayer> read_stack(const nlohmann::json& specs, const nlohmann::json& params,
                                   const char* name) {
  if (!specs.is_array() || !params.is_array() || specs.size() != params.size()) {
    throw std::runtime_error(std::string("model file: malformed stack '") + name + "'");
  }
  std::vector<DenseLayer> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto in = specs[i].at("in_dim").get<std::size_t>();
    const auto outd = specs[i].at("out_dim").get<std::size_t>();
    DenseLayer layer{Matrix(in, outd), {}, activation_from_string(specs[i].at("activation").get<std::string>())};
    const auto& w = params[i].at("weights");
    if (!w.is_array() || w.size() != in) {
      throw std::runtime_error(std::string("model file: ") + name + " layer " +
                               std::to_string(i) + " weight rows do not match in_dim");
    }
    for (std::size_t r = 0; r < in; ++r) {
      if (w[r].size() != outd) {
        throw std::runtime_error(std::string("model file: ") + name + " layer " +
                                 std::to_string(i) + " weight columns do not match out_dim");
      }
      for (std::size_t c = 0; c < outd; ++c) layer.weights(r, c) = w[r][c].get<double>();
    }
    layer.bias = params[i].at("bias").get<std::vector<double>>();
    if (layer.bias.size() != outd) {
      throw std::runtime_error(std::string("model file: ") + name + " layer " +
                               std::to_string(i) + " bias length does not match out_dim");
    }
    out.push_back(std::move(layer));
  }
  return out;
}

}  // namespace

std::string model_to_json(const ModelParams& p) {
  std::ostringstream os;
  os << "{\n  \"format_version\": " << kFormatVersion << ",\n  \"intermediate_tap\": "
     << p.intermediate_tap << ",\n  \"specs\": {\n    \"encoder\": ";
  put_specs(os, p.encoder);
  os << ",\n    \"projector\": ";
  put_specs(os, p.projector);
  os << ",\n    \"classifier\": ";
  put_specs(os, p.classifier);
  os << ",\n    \"adapter\": ";
  put_specs(os, p.adapter);
  os << "\n  },\n  \"parameters\": {\n    \"encoder\": ";
  put_stack(os, p.encoder);
  os << ",\n    \"projector\": ";
  put_stack(os, p.projector);
  os << ",\n    \"classifier\": ";
  put_stack(os, p.classifier);
  os << ",\n    \"adapter\": ";
  put_stack(os, p.adapter);
  os << "\n  }\n}\n";
  return os.str();
}

ModelParams model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("model file: invalid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw std::runtime_error("model file: unsupported format_version " + std::to_string(version));
    }
    ModelParams p;
    const auto& specs = j.at("specs");
    const auto& params = j.at("parameters");
    p.encoder = read_stack(specs.at("encoder"), params.at("encoder"), "encoder");
    p.projector = read_stack(specs.at("projector"), params.at("projector"), "projector");
    p.classifier = read_stack(specs.at("classifier"), params.at("classifier"), "classifier");
    if (specs.contains("adapter")) {
      p.adapter = read_stack(specs.at("adapter"), params.at("adapter"), "adapter");
    }
    p.intermediate_tap = j.at("intermediate_tap").get<std::size_t>();
    p.architecture().validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model file: ") + e.what());
  }
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << model_to_json(params);
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace dskd
