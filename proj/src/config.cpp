#include "warpfake/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "warpfake/checkpoint.hpp"

namespace warpfake {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_range(const json& obj, const char* key, JitterRange& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(where + "." + key + " must be [min, max]");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

json range_json(const JitterRange& r) { return json::array({r.min, r.max}); }

}  // namespace

void RunConfig::set_seed(std::uint64_t value) {
  seed = value;
  synth.rng_seed = value;
  train.seed = value;
}

void RunConfig::validate() const {
  synth.validate();
  train.validate();
  try {
    model.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (n_crops < 1) throw ConfigError("score.n_crops must be >= 1");
  if (!(max_skip_fraction >= 0.0 && max_skip_fraction <= 1.0)) {
    throw ConfigError("max_skip_fraction must be in [0, 1]");
  }
}

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["max_skip_fraction"] = max_skip_fraction;
  j["synth"] = {
      {"scales", synth.scales},
      {"target_size", synth.target_size},
      {"blur_size", synth.blur_size},
      {"blur_sigma", synth.blur_sigma},
      {"whole_face_prob", synth.whole_face_prob},
      {"convex_polygon_prob", synth.convex_polygon_prob},
      {"brightness", range_json(synth.brightness)},
      {"contrast", range_json(synth.contrast)},
      {"sharpness", range_json(synth.sharpness)},
      {"distortion", range_json(synth.distortion)},
      {"feather_px", synth.feather_px},
      {"hard_edge_prob", synth.hard_edge_prob},
      {"conversion_ratio", synth.conversion_ratio},
  };
  j["model"] = {{"input_size", model.input_size}, {"channels", model.channels}};
  j["train"] = {
      {"batch_size", train.batch_size},
      {"lr0", train.lr0},
      {"lr_decay", train.lr_decay},
      {"lr_decay_steps", train.lr_decay_steps},
      {"max_epochs", train.max_epochs},
      {"hard_mine_epochs", train.hard_mine_epochs},
      {"hard_mine_lr", train.hard_mine_lr},
      {"hard_threshold", train.hard_threshold},
      {"momentum", train.momentum},
  };
  j["score"] = {{"n_crops", n_crops}};
  j["eval"] = {{"roc_csv", roc_csv}};
  return j.dump(2) + "\n";
}

std::uint64_t RunConfig::hash() const { return fnv1a64(to_json()); }

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  reject_unknown(root, {"seed", "output_dir", "max_skip_fraction", "synth", "model", "train", "score", "eval"},
                 "config");
  RunConfig cfg;
  read(root, "seed", cfg.seed, "config");
  read(root, "output_dir", cfg.output_dir, "config");
  read(root, "max_skip_fraction", cfg.max_skip_fraction, "config");

  if (root.contains("synth")) {
    const json& s = root.at("synth");
    reject_unknown(s,
                   {"scales", "target_size", "blur_size", "blur_sigma", "whole_face_prob",
                    "convex_polygon_prob", "brightness", "contrast", "sharpness", "distortion",
                    "feather_px", "hard_edge_prob", "conversion_ratio"},
                   "synth");
    read(s, "scales", cfg.synth.scales, "synth");
    read(s, "target_size", cfg.synth.target_size, "synth");
    read(s, "blur_size", cfg.synth.blur_size, "synth");
    read(s, "blur_sigma", cfg.synth.blur_sigma, "synth");
    read(s, "whole_face_prob", cfg.synth.whole_face_prob, "synth");
    read(s, "convex_polygon_prob", cfg.synth.convex_polygon_prob, "synth");
    read_range(s, "brightness", cfg.synth.brightness, "synth");
    read_range(s, "contrast", cfg.synth.contrast, "synth");
    read_range(s, "sharpness", cfg.synth.sharpness, "synth");
    read_range(s, "distortion", cfg.synth.distortion, "synth");
    read(s, "feather_px", cfg.synth.feather_px, "synth");
    read(s, "hard_edge_prob", cfg.synth.hard_edge_prob, "synth");
    read(s, "conversion_ratio", cfg.synth.conversion_ratio, "synth");
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    reject_unknown(m, {"input_size", "channels"}, "model");
    read(m, "input_size", cfg.model.input_size, "model");
    read(m, "channels", cfg.model.channels, "model");
  }
  if (root.contains("train")) {
    const json& t = root.at("train");
    reject_unknown(t,
                   {"batch_size", "lr0", "lr_decay", "lr_decay_steps", "max_epochs", "hard_mine_epochs",
                    "hard_mine_lr", "hard_threshold", "momentum"},
                   "train");
    read(t, "batch_size", cfg.train.batch_size, "train");
    read(t, "lr0", cfg.train.lr0, "train");
    read(t, "lr_decay", cfg.train.lr_decay, "train");
    read(t, "lr_decay_steps", cfg.train.lr_decay_steps, "train");
    read(t, "max_epochs", cfg.train.max_epochs, "train");
    read(t, "hard_mine_epochs", cfg.train.hard_mine_epochs, "train");
    read(t, "hard_mine_lr", cfg.train.hard_mine_lr, "train");
    read(t, "hard_threshold", cfg.train.hard_threshold, "train");
    read(t, "momentum", cfg.train.momentum, "train");
  }
  if (root.contains("score")) {
    const json& s = root.at("score");
    reject_unknown(s, {"n_crops"}, "score");
    read(s, "n_crops", cfg.n_crops, "score");
  }
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    reject_unknown(e, {"roc_csv"}, "eval");
    read(e, "roc_csv", cfg.roc_csv, "eval");
  }
  cfg.set_seed(cfg.seed);
  cfg.synth.sample_size = cfg.model.input_size;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str());
}

}  // namespace warpfake
