#include "dskd/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "dskd/checksum.hpp"
#include "dskd/data.hpp"
#include "dskd/diagnostics.hpp"
#include "dskd/distill.hpp"
#include "dskd/geo.hpp"
#include "dskd/model.hpp"
#include "json.hpp"

namespace dskd::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

/// Bad arguments or configuration values: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// "train.batch_size" -> "--batch-size"
std::string short_flag(const std::string& key) {
  std::string s = key.substr(key.find('.') + 1);
  for (auto& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

/// Everything a subcommand might need, filled by CLI11.
struct Options {
  std::string config_path;
  std::map<std::string, std::string> overrides;  // dotted key -> flag value
  std::vector<std::string> sets;                 // --set key=value
  std::string out, data, teacher, model;
  std::string split = "test";
  std::string modality;
  std::string variants;
  std::size_t seeds = 5;
  std::size_t jobs = 1;
  bool distances = false;
  bool quiet = false;
  // geo
  std::string box, image, radar, optics, batch, width_mode = "tan";
  double range = 0.0, B = 0.0, L = 0.0, I = 0.0, f_min = 0.0, beam = 0.0;
};

struct Effective {
  TrainingConfig cfg;
  GenSpec gen;
};

void flatten(const nlohmann::json& j, const std::string& prefix, KeyValues& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto& v = it.value();
    if (v.is_object()) {
      flatten(v, key, out);
    } else if (v.is_string()) {
      out.emplace_back(key, v.get<std::string>());
    } else if (v.is_array()) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i].dump();
      out.emplace_back(key, s);
    } else {
      out.emplace_back(key, v.dump());
    }
  }
}

void apply(Effective& e, const std::string& key, const std::string& value, const std::string& origin) {
  try {
    if (!apply_key_value(e.cfg, e.gen, key, value)) {
      std::string known;
      for (const auto& k : known_config_keys()) known += "\n  " + k;
      throw UsageError(origin + ": unknown configuration key '" + key + "'; valid keys:" + known);
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw UsageError(origin + ": " + ex.what());
  }
}

/// Defaults, then the config file, then flags.
Effective resolve(const Options& o) {
  Effective e;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw std::runtime_error("config file not found: '" + o.config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.config_path));
    } catch (const nlohmann::json::parse_error& ex) {
      throw UsageError("config file '" + o.config_path + "': invalid JSON: " + ex.what());
    }
    if (!j.is_object()) throw UsageError("config file '" + o.config_path + "': expected a JSON object");
    // A manifest written by this tool carries its effective config under "config".
    if (j.contains("config") && j.contains("artifacts")) j = j["config"];
    KeyValues kv;
    flatten(j, "", kv);
    for (const auto& [k, v] : kv) apply(e, k, v, "config file '" + o.config_path + "'");
  }
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    apply(e, s.substr(0, eq), s.substr(eq + 1), "--set");
  }
  for (const auto& [k, v] : o.overrides) apply(e, k, v, short_flag(k));
  try {
    e.cfg.validate();
    e.gen.validate();
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
  return e;
}

ojson config_json(const Effective& e) {
  ojson j = ojson::object();
  for (const auto& [k, v] : to_key_values(e.cfg)) j[k] = v;
  for (const auto& [k, v] : to_key_values(e.gen)) j[k] = v;
  return j;
}

fs::path require_out(const Options& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  fs::create_directories(o.out);
  return o.out;
}

void require_path(const std::string& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("--") + what + " is required");
  if (!fs::exists(p)) throw std::runtime_error(std::string(what) + " path not found: '" + p + "'");
}

/// manifest.json: effective config, seed, input and artifact checksums.
void write_manifest(const fs::path& dir, const std::string& command, const Effective& e,
                    const std::vector<std::pair<std::string, std::string>>& inputs,
                    const std::vector<std::string>& artifacts) {
  ojson j;
  j["tool"] = "dskd";
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = e.cfg.seed;
  j["config"] = config_json(e);
  ojson in = ojson::object();
  for (const auto& [name, path] : inputs) {
    // Relative to the manifest so a relocated run tree reproduces it byte for byte.
    const fs::path rel = fs::weakly_canonical(path).lexically_relative(fs::weakly_canonical(dir));
    ojson entry{{"path", rel.empty() ? path : rel.generic_string()}};
    if (fs::is_regular_file(path)) {
      entry["fnv1a64"] = file_checksum(path);
    } else if (fs::is_directory(path)) {
      ojson files = ojson::object();
      std::vector<fs::path> names;
      for (const auto& f : fs::directory_iterator(path))
        if (f.is_regular_file()) names.push_back(f.path());
      std::sort(names.begin(), names.end());
      for (const auto& f : names) files[f.filename().string()] = file_checksum(f);
      entry["files"] = std::move(files);
    }
    in[name] = std::move(entry);
  }
  j["inputs"] = std::move(in);
  ojson arts = ojson::object();
  for (const auto& a : artifacts) arts[a] = file_checksum(dir / a);
  j["artifacts"] = std::move(arts);
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

std::string summary_line(const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s + "\n";
}

PairedDataset load_data(const std::string& dir) {
  require_path(dir, "data");
  return load_dataset_dir(dir);
}

ModelParams load_model_arg(const std::string& path, const char* what) {
  require_path(path, what);
  return load_model(path);
}

EpochCallback progress(const Options& o, std::ostream& err, const std::string& role) {
  if (o.quiet) return {};
  return [&err, role](const EpochStats& s) {
    err << role << " epoch " << s.epoch << " lr=" << fmt17(s.lr);
    for (const auto& [k, v] : s.components) err << ' ' << k << '=' << v;
    err << '\n';
  };
}

int cmd_gen(const Options& o, std::ostream& out) {
  const Effective e = resolve(o);
  const fs::path dir = require_out(o);
  SeededRng rng(e.cfg.seed);
  const PairedDataset ds = generate(e.gen, rng);
  save_csv(ds, dir);
  write_manifest(dir, "gen", e, {}, {"m1.csv", "m2.csv", "labels.csv", "split.csv"});
  out << summary_line({{"command", "gen"},
                       {"rows", std::to_string(ds.size())},
                       {"train", std::to_string(ds.indices(Split::train).size())},
                       {"test", std::to_string(ds.indices(Split::test).size())},
                       {"seed", std::to_string(e.cfg.seed)},
                       {"out", dir.string()}});
  return kOk;
}

int cmd_train_teacher(const Options& o, std::ostream& out, std::ostream& err) {
  const Effective e = resolve(o);
  const PairedDataset ds = load_data(o.data);
  const fs::path dir = require_out(o);
  const TrainResult r = train_teacher(ds, e.cfg, progress(o, err, "teacher"));
  save_model(r.model, dir / "teacher.json");
  write_file(dir / "report.json", report_to_json(r.report));
  write_manifest(dir, "train-teacher", e, {{"data", o.data}}, {"teacher.json", "report.json"});
  out << summary_line({{"command", "train-teacher"},
                       {"train_acc", fmt17(r.report.train_accuracy)},
                       {"test_acc", fmt17(r.report.test_accuracy)},
                       {"seed", std::to_string(e.cfg.seed)},
                       {"model", (dir / "teacher.json").string()}});
  return kOk;
}

int cmd_distill(const Options& o, std::ostream& out, std::ostream& err) {
  const Effective e = resolve(o);
  const PairedDataset ds = load_data(o.data);
  const ModelParams teacher = load_model_arg(o.teacher, "teacher");
  const fs::path dir = require_out(o);
  const TrainResult r = distill_student(ds, teacher, e.cfg, progress(o, err, "student"));
  save_model(r.model, dir / "student.json");
  write_file(dir / "report.json", report_to_json(r.report));
  write_manifest(dir, "distill", e, {{"data", o.data}, {"teacher", o.teacher}},
                 {"student.json", "report.json"});
  out << summary_line({{"command", "distill"},
                       {"variant", to_string(e.cfg.variant)},
                       {"train_acc", fmt17(r.report.train_accuracy)},
                       {"test_acc", fmt17(r.report.test_accuracy)},
                       {"seed", std::to_string(e.cfg.seed)},
                       {"model", (dir / "student.json").string()}});
  return kOk;
}

Modality pick_modality(const Options& o, const ModelParams& m) {
  if (!o.modality.empty()) {
    try {
      return modality_from_string(o.modality);
    } catch (const std::exception& ex) {
      throw UsageError(ex.what());
    }
  }
  // Students carry the adapter and read the corrupted modality.
  return m.has_adapter() ? Modality::m1 : Modality::m2;
}

Split pick_split(const Options& o) {
  try {
    return split_from_string(o.split);
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
}

int cmd_eval(const Options& o, std::ostream& out) {
  const PairedDataset ds = load_data(o.data);
  const ModelParams m = load_model_arg(o.model, "model");
  const Split split = pick_split(o);
  const Modality mod = pick_modality(o, m);
  const double acc = evaluate(m, ds, split, mod);
  if (!o.out.empty()) {
    const Effective e = resolve(o);
    const fs::path dir = require_out(o);
    ojson j{{"model", o.model}, {"split", to_string(split)}, {"modality", to_string(mod)},
            {"rows", ds.indices(split).size()}, {"accuracy", acc}};
    write_file(dir / "eval.json", j.dump(2) + "\n");
    write_manifest(dir, "eval", e, {{"data", o.data}, {"model", o.model}}, {"eval.json"});
  }
  out << summary_line({{"command", "eval"},
                       {"split", to_string(split)},
                       {"modality", to_string(mod)},
                       {"accuracy", fmt17(acc)}});
  return kOk;
}

/// Teacher for a sweep: the given file, or one trained from the base seed and saved.
ModelParams sweep_teacher(const Options& o, const Effective& e, const PairedDataset& ds,
                          const fs::path& dir, std::ostream& err,
                          std::vector<std::pair<std::string, std::string>>& inputs,
                          std::vector<std::string>& artifacts) {
  if (!o.teacher.empty()) {
    inputs.emplace_back("teacher", o.teacher);
    return load_model_arg(o.teacher, "teacher");
  }
  const TrainResult t = train_teacher(ds, e.cfg, progress(o, err, "teacher"));
  save_model(t.model, dir / "teacher.json");
  artifacts.push_back("teacher.json");
  return t.model;
}

std::string sweep_summary(const ComparisonTable& t) {
  std::string s;
  for (const auto& r : t.summary) s += " mean_test[" + r.label + "]=" + fmt17(r.mean_test);
  return s;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  const Effective e = resolve(o);
  std::vector<LossVariant> variants;
  try {
    if (o.variants.empty()) {
      variants = {LossVariant::ce_only, LossVariant::kd,  LossVariant::fitnets, LossVariant::gram,
                  LossVariant::sem,     LossVariant::dcm, LossVariant::full};
    } else {
      std::stringstream ss(o.variants);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) variants.push_back(variant_from_string(tok));
    }
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
  if (variants.empty()) throw UsageError("--variants: no variants given");
  if (o.seeds < 1) throw UsageError("--seeds must be >= 1");
  // A mask only applies to full; sweep each variant with its own (empty) mask.
  TrainingConfig base = e.cfg;
  base.ablation_mask = {};
  const PairedDataset ds = load_data(o.data);
  const fs::path dir = require_out(o);
  std::vector<std::pair<std::string, std::string>> inputs{{"data", o.data}};
  std::vector<std::string> artifacts;
  const ModelParams teacher = sweep_teacher(o, e, ds, dir, err, inputs, artifacts);
  const ComparisonTable t = compare(ds, teacher, base, variants, o.seeds, o.jobs);
  write_file(dir / "summary.csv", table_to_csv(t));
  write_file(dir / "summary.json", table_to_json(t));
  artifacts.push_back("summary.json");
  // summary.csv carries wall time and is left out of the checksummed artifacts.
  write_manifest(dir, "compare", e, inputs, artifacts);
  out << "command=compare runs=" << t.runs.size() << sweep_summary(t) << '\n';
  return kOk;
}

int cmd_ablate(const Options& o, std::ostream& out, std::ostream& err) {
  Effective e = resolve(o);
  if (e.cfg.variant != LossVariant::full) {
    throw UsageError("ablate requires --loss full, got " + to_string(e.cfg.variant));
  }
  if (o.seeds < 1) throw UsageError("--seeds must be >= 1");
  const PairedDataset ds = load_data(o.data);
  const fs::path dir = require_out(o);
  std::vector<std::pair<std::string, std::string>> inputs{{"data", o.data}};
  std::vector<std::string> artifacts;
  const ModelParams teacher = sweep_teacher(o, e, ds, dir, err, inputs, artifacts);
  const ComparisonTable t = ablate(ds, teacher, e.cfg, o.seeds, o.jobs);
  write_file(dir / "summary.csv", table_to_csv(t));
  write_file(dir / "summary.json", table_to_json(t));
  artifacts.push_back("summary.json");
  write_manifest(dir, "ablate", e, inputs, artifacts);
  out << "command=ablate runs=" << t.runs.size() << sweep_summary(t) << '\n';
  return kOk;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
  const Effective e = resolve(o);
  const PairedDataset ds = load_data(o.data);
  const ModelParams m = load_model_arg(o.model, "model");
  const Split split = pick_split(o);
  const Modality mod = pick_modality(o, m);
  const fs::path dir = require_out(o);
  DiagnosticsReport r = diagnose(m, ds, split, mod, e.cfg.loss.sigma, e.cfg.loss.eps);
  r.model_id = file_checksum(o.model);
  r.seed = e.cfg.seed;
  write_file(dir / "report.json", diagnostics_to_json(r));
  write_file(dir / "selfsim.csv", matrix_to_csv(r.self_similarity.c));
  write_heatmap_pgm(r.self_similarity, dir / "selfsim.pgm");
  std::vector<std::string> artifacts{"report.json", "selfsim.csv", "selfsim.pgm"};
  if (o.distances) {
    const Matrix t = intermediate_features(m, gather_rows(ds.features(mod), ds.indices(split)));
    std::string csv = "i,j,distance\n";
    const auto d = pairwise_distances(t);
    std::size_t k = 0;
    for (std::size_t i = 0; i < t.rows(); ++i)
      for (std::size_t j = i + 1; j < t.rows(); ++j)
        csv += std::to_string(i) + "," + std::to_string(j) + "," + fmt17(d[k++]) + "\n";
    write_file(dir / "distances.csv", csv);
    artifacts.push_back("distances.csv");
  }
  write_manifest(dir, "diagnose", e, {{"data", o.data}, {"model", o.model}}, artifacts);
  out << summary_line({{"command", "diagnose"},
                       {"split", to_string(split)},
                       {"modality", to_string(mod)},
                       {"offdiag_mass", fmt17(r.offdiag_mass)},
                       {"uniformity", fmt17(r.uniformity)},
                       {"uniformity_tap", fmt17(r.uniformity_tap)}});
  return kOk;
}

std::vector<double> parse_list(const std::string& flag, const std::string& s, std::size_t n) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw UsageError(flag + ": '" + tok + "' is not a number");
    v.push_back(x);
  }
  if (v.size() != n) {
    throw UsageError(flag + ": expected " + std::to_string(n) + " comma-separated numbers, got '" + s + "'");
  }
  return v;
}

const char* kPointingHeader = "x,y,w,h,A1,D1,target_lat,target_lon,A2,D2,P,T,W,Z\n";

std::string pointing_row(const geo::BoundingBox& b, const geo::PointingSolution& s) {
  std::string row;
  for (double v : {b.x, b.y, b.w, b.h, s.radar_rel.A, s.radar_rel.D, s.target.lat, s.target.lon,
                   s.optics_rel.A, s.optics_rel.D, s.P, s.T, s.W, s.Z}) {
    row += (row.empty() ? "" : ",") + fmt17(v);
  }
  return row + "\n";
}

int cmd_geo(const Options& o, std::ostream& out) {
  if (o.image.empty() || o.radar.empty() || o.optics.empty()) {
    throw UsageError("geo needs --image, --range, --radar and --optics");
  }
  if (o.box.empty() == o.batch.empty()) throw UsageError("geo needs exactly one of --box or --batch");
  const auto img = parse_list("--image", o.image, 2);
  const auto rad = parse_list("--radar", o.radar, 2);
  const auto opt = parse_list("--optics", o.optics, 2);
  const geo::RadarImageSpec spec{img[0], img[1], o.range};
  const geo::LatLon radar{rad[0], rad[1]}, optics{opt[0], opt[1]};
  const geo::OpticsConfig cfg{o.B, o.L, o.I, o.f_min, o.beam};
  geo::WidthMode mode;
  try {
    mode = geo::width_mode_from_string(o.width_mode);
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }

  std::vector<geo::BoundingBox> boxes;
  if (!o.box.empty()) {
    const auto b = parse_list("--box", o.box, 4);
    boxes.push_back({b[0], b[1], b[2], b[3]});
  } else {
    if (!fs::exists(o.batch)) throw std::runtime_error("batch file not found: '" + o.batch + "'");
    std::stringstream ss(read_file(o.batch));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (lineno == 1 && !(std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '-' || line[0] == '.')) {
        continue;  // header
      }
      try {
        const auto b = parse_list("detection", line, 4);
        boxes.push_back({b[0], b[1], b[2], b[3]});
      } catch (const UsageError& ex) {
        throw std::runtime_error(o.batch + " line " + std::to_string(lineno) + ": " + ex.what());
      }
    }
  }

  std::string csv = kPointingHeader;
  geo::PointingSolution last;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    try {
      last = geo::solve_pointing(boxes[i], spec, radar, optics, cfg, mode);
    } catch (const std::exception& ex) {
      throw std::runtime_error("detection " + std::to_string(i) + ": " + ex.what());
    }
    csv += pointing_row(boxes[i], last);
  }
  if (!o.out.empty()) {
    const fs::path dir = require_out(o);
    write_file(dir / "pointing.csv", csv);
    Effective e;
    std::vector<std::pair<std::string, std::string>> inputs;
    if (!o.batch.empty()) inputs.emplace_back("batch", o.batch);
    write_manifest(dir, "geo", e, inputs, {"pointing.csv"});
  }
  if (boxes.size() == 1) {
    out << summary_line({{"command", "geo"},
                         {"A1", fmt17(last.radar_rel.A)},
                         {"D1", fmt17(last.radar_rel.D)},
                         {"A2", fmt17(last.optics_rel.A)},
                         {"D2", fmt17(last.optics_rel.D)},
                         {"P", fmt17(last.P)},
                         {"T", fmt17(last.T)},
                         {"W", fmt17(last.W)},
                         {"Z", fmt17(last.Z)}});
  } else {
    out << "command=geo detections=" << boxes.size() << '\n';
  }
  return kOk;
}

void add_config_options(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON config: flat dotted keys, or a manifest.json");
  sub->add_option("--set", o.sets, "Override any dotted key, e.g. --set loss.gamma=0.5");
  for (const auto& key : known_config_keys()) {
    std::string names = short_flag(key) + ",--" + key;
    if (key == "train.loss_variant") names += ",--loss";
    if (key == "train.ablation_mask") names += ",--ablate-mask";
    sub->add_option_function<std::string>(
        names, [&o, key](const std::string& v) { o.overrides[key] = v; }, "sets " + key);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Dimensional-structure cross-modal distillation toolkit", "dskd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* gen = app.add_subcommand("gen", "Generate the synthetic paired dataset");
  auto* tt = app.add_subcommand("train-teacher", "Train the teacher on the clean modality");
  auto* dist = app.add_subcommand("distill", "Train a student on the corrupted modality");
  auto* ev = app.add_subcommand("eval", "Top-1 accuracy of a model on one split");
  auto* cmp = app.add_subcommand("compare", "Multi-seed comparison of loss variants");
  auto* abl = app.add_subcommand("ablate", "Full objective and its single-term removals");
  auto* diag = app.add_subcommand("diagnose", "Self-similarity, uniformity and distance statistics");
  auto* geo_cmd = app.add_subcommand("geo", "Radar detection to optics pan/tilt/zoom");

  for (auto* s : {gen, tt, dist, ev, cmp, abl, diag}) add_config_options(s, o);
  for (auto* s : {gen, tt, dist, ev, cmp, abl, diag, geo_cmd}) {
    s->add_option("--out", o.out, "Output directory");
  }
  for (auto* s : {tt, dist, ev, cmp, abl, diag}) s->add_option("--data", o.data, "Dataset directory");
  for (auto* s : {dist, cmp, abl}) s->add_option("--teacher", o.teacher, "Teacher model file");
  for (auto* s : {ev, diag}) {
    s->add_option("--model", o.model, "Model file");
    s->add_option("--split", o.split, "train or test")->capture_default_str();
    s->add_option("--modality", o.modality, "m1 or m2 (default: m1 for students, m2 for teachers)");
  }
  for (auto* s : {tt, dist, cmp, abl}) s->add_flag("--quiet", o.quiet, "No per-epoch progress");
  for (auto* s : {cmp, abl}) {
    s->add_option("--seeds", o.seeds, "Seeds per row, starting at --seed")->capture_default_str();
    s->add_option("--jobs", o.jobs, "Parallel runs")->capture_default_str();
  }
  cmp->add_option("--variants", o.variants, "Comma-separated variants (default: all seven baselines)");
  diag->add_flag("--distances", o.distances, "Also write distances.csv");

  geo_cmd->add_option("--box", o.box, "x,y,w,h in pixels");
  geo_cmd->add_option("--batch", o.batch, "CSV of detections x,y,w,h");
  geo_cmd->add_option("--image", o.image, "X,Y radar image size in pixels");
  geo_cmd->add_option("--range", o.range, "Radar range R in metres")->required();
  geo_cmd->add_option("--radar", o.radar, "Radar lat,lon in degrees");
  geo_cmd->add_option("--optics", o.optics, "Optics lat,lon in degrees");
  geo_cmd->add_option("--B", o.B, "Optics zero direction from north, degrees")->capture_default_str();
  geo_cmd->add_option("--L", o.L, "Optics height, metres")->required();
  geo_cmd->add_option("--I", o.I, "CCD length, metres")->required();
  geo_cmd->add_option("--f-min", o.f_min, "Minimum focal length, metres")->required();
  geo_cmd->add_option("--beam", o.beam, "Radar beam width b, degrees")->capture_default_str();
  geo_cmd->add_option("--width-mode", o.width_mode, "tan or literal")->capture_default_str();

  std::vector<std::string> argv_store{"dskd"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  auto failing_help = [&](std::ostream& os) {
    const auto subs = app.get_subcommands();
    os << (subs.empty() ? app.help() : subs.front()->help());
  };

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    failing_help(err);
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, out);
    if (tt->parsed()) return cmd_train_teacher(o, out, err);
    if (dist->parsed()) return cmd_distill(o, out, err);
    if (ev->parsed()) return cmd_eval(o, out);
    if (cmp->parsed()) return cmd_compare(o, out, err);
    if (abl->parsed()) return cmd_ablate(o, out, err);
    if (diag->parsed()) return cmd_diagnose(o, out);
    if (geo_cmd->parsed()) return cmd_geo(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    failing_help(err);
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace dskd::cli
