#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "dskd/distill.hpp"
#include "json.hpp"

namespace dskd {
namespace {

using ojson = nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || v < 1) {
      throw std::invalid_argument(key + ": expected comma-separated positive widths, got '" + s + "'");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw std::invalid_argument(key + ": needs at least one width");
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument(key + ": expected a number, got '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw std::invalid_argument(key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + s + "'");
}

ojson config_json(const TrainingConfig& cfg) {
  ojson j = ojson::object();
  for (const auto& [k, v] : to_key_values(cfg)) j[k] = v;
  return j;
}

ojson components_json(const std::map<std::string, double>& m) {
  ojson j = ojson::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

}  // namespace

std::string report_to_json(const RunReport& r) {
  ojson j;
  j["role"] = r.role;
  j["seed"] = r.config.seed;
  j["variant"] = to_string(r.config.variant);
  j["config"] = config_json(r.config);
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["optimizer_steps"] = r.optimizer_steps;
  ojson epochs = ojson::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"components", components_json(e.components)}});
  }
  j["epochs"] = std::move(epochs);
  if (!r.batches.empty()) {
    ojson batches = ojson::array();
    for (const auto& b : r.batches) {
      batches.push_back({{"epoch", b.epoch}, {"components", components_json(b.components)}});
    }
    j["batches"] = std::move(batches);
  }
  return j.dump(2) + "\n";
}

std::string table_to_json(const ComparisonTable& t) {
  ojson j;
  ojson runs = ojson::array();
  for (const auto& r : t.runs) {
    runs.push_back({{"label", r.label},
                    {"variant", to_string(r.variant)},
                    {"ablation_mask", r.mask.to_string()},
                    {"seed", r.seed},
                    {"train_accuracy", r.train_accuracy},
                    {"test_accuracy", r.test_accuracy}});
  }
  ojson summary = ojson::array();
  for (const auto& s : t.summary) {
    summary.push_back({{"label", s.label},
                       {"runs", s.runs},
                       {"mean_test_accuracy", s.mean_test},
                       {"std_test_accuracy", s.std_test},
                       {"mean_train_accuracy", s.mean_train}});
  }
  j["runs"] = std::move(runs);
  j["summary"] = std::move(summary);
  return j.dump(2) + "\n";
}

std::string table_to_csv(const ComparisonTable& t) {
  std::ostringstream os;
  os << "label,variant,seed,train_acc,test_acc,wall_s\n";
  for (const auto& r : t.runs) {
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_seconds);
    os << r.label << ',' << to_string(r.variant) << ',' << r.seed << ',' << fmt17(r.train_accuracy)
       << ',' << fmt17(r.test_accuracy) << ',' << wall << '\n';
  }
  return os.str();
}

KeyValues to_key_values(const TrainingConfig& c) {
  return {
      {"train.epochs", std::to_string(c.epochs)},
      {"train.batch_size", std::to_string(c.batch_size)},
      {"train.lr_init", fmt17(c.lr_init)},
      {"train.lr_final", fmt17(c.lr_final)},
      {"train.momentum", fmt17(c.momentum)},
      {"train.weight_decay", fmt17(c.weight_decay)},
      {"train.seed", std::to_string(c.seed)},
      {"train.loss_variant", to_string(c.variant)},
      {"train.ablation_mask", c.ablation_mask.to_string()},
      {"train.normalize_intermediate", c.normalize_intermediate ? "true" : "false"},
      {"train.record_batches", c.record_batches ? "true" : "false"},
      {"loss.lambda", fmt17(c.loss.lambda)},
      {"loss.gamma", fmt17(c.loss.gamma)},
      {"loss.tau", fmt17(c.loss.tau)},
      {"loss.sigma", fmt17(c.loss.sigma)},
      {"loss.eps", fmt17(c.loss.eps)},
      {"loss.center", c.loss.center ? "true" : "false"},
      {"arch.teacher_encoder", join(c.arch.teacher_encoder)},
      {"arch.student_encoder", join(c.arch.student_encoder)},
      {"arch.projector_hidden", std::to_string(c.arch.projector_hidden)},
      {"arch.projection_dim", std::to_string(c.arch.projection_dim)},
      {"arch.intermediate_tap", std::to_string(c.arch.intermediate_tap)},
  };
}

KeyValues to_key_values(const GenSpec& g) {
  return {
      {"gen.classes", std::to_string(g.classes)},
      {"gen.dim", std::to_string(g.dim)},
      {"gen.per_class", std::to_string(g.per_class)},
      {"gen.corruption_rate", fmt17(g.corruption_rate)},
      {"gen.corruption_amplitude", fmt17(g.corruption_amplitude)},
      {"gen.cluster_std", fmt17(g.cluster_std)},
      {"gen.nonlinearity_seed", std::to_string(g.nonlinearity_seed)},
      {"gen.train_fraction", fmt17(g.train_fraction)},
  };
}

bool apply_key_value(TrainingConfig& c, GenSpec& g, const std::string& k, const std::string& v) {
  if (k == "train.epochs") c.epochs = parse_uint(k, v);
  else if (k == "train.batch_size") c.batch_size = parse_uint(k, v);
  else if (k == "train.lr_init") c.lr_init = parse_double(k, v);
  else if (k == "train.lr_final") c.lr_final = parse_double(k, v);
  else if (k == "train.momentum") c.momentum = parse_double(k, v);
  else if (k == "train.weight_decay") c.weight_decay = parse_double(k, v);
  else if (k == "train.seed") c.seed = parse_uint(k, v);
  else if (k == "train.loss_variant") c.variant = variant_from_string(v);
  else if (k == "train.ablation_mask") c.ablation_mask = AblationMask::parse(v);
  else if (k == "train.normalize_intermediate") c.normalize_intermediate = parse_bool(k, v);
  else if (k == "train.record_batches") c.record_batches = parse_bool(k, v);
  else if (k == "loss.lambda") c.loss.lambda = parse_double(k, v);
  else if (k == "loss.gamma") c.loss.gamma = parse_double(k, v);
  else if (k == "loss.tau") c.loss.tau = parse_double(k, v);
  else if (k == "loss.sigma") c.loss.sigma = parse_double(k, v);
  else if (k == "loss.eps") c.loss.eps = parse_double(k, v);
  else if (k == "loss.center") c.loss.center = parse_bool(k, v);
  else if (k == "arch.teacher_encoder") c.arch.teacher_encoder = parse_widths(k, v);
  else if (k == "arch.student_encoder") c.arch.student_encoder = parse_widths(k, v);
  else if (k == "arch.projector_hidden") c.arch.projector_hidden = parse_uint(k, v);
  else if (k == "arch.projection_dim") c.arch.projection_dim = parse_uint(k, v);
  else if (k == "arch.intermediate_tap") c.arch.intermediate_tap = parse_uint(k, v);
  else if (k == "gen.classes") g.classes = parse_uint(k, v);
  else if (k == "gen.dim") g.dim = parse_uint(k, v);
  else if (k == "gen.per_class") g.per_class = parse_uint(k, v);
  else if (k == "gen.corruption_rate") g.corruption_rate = parse_double(k, v);
  else if (k == "gen.corruption_amplitude") g.corruption_amplitude = parse_double(k, v);
  else if (k == "gen.cluster_std") g.cluster_std = parse_double(k, v);
  else if (k == "gen.nonlinearity_seed") g.nonlinearity_seed = parse_uint(k, v);
  else if (k == "gen.train_fraction") g.train_fraction = parse_double(k, v);
  else return false;
  return true;
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : to_key_values(TrainingConfig{})) keys.push_back(k);
  for (const auto& [k, v] : to_key_values(GenSpec{})) keys.push_back(k);
  return keys;
}

}  // namespace dskd
