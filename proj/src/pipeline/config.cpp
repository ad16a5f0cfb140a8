// Copyright 2026 The hoisynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "hoisynth/pipeline/pipeline.h"
#include "hoisynth/pipeline/toml.h"

namespace hoisynth::pipeline {
namespace {

namespace fs = std::filesystem;

// Known keys per section; anything else is a typo worth rejecting.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"",
       {"text", "planner", "dynamics", "dynamics0", "seed", "output_dir",
        "write_obj_frames", "contact_threshold"}},
      {"paths", {"rig", "db", "clips", "lexicon"}},
      {"dynamics_config",
       {"m", "history", "future", "history0", "future0", "delta1", "delta2"}},
      {"refine",
       {"lambda_fit", "lambda_vel", "lambda_cont", "lambda_pene", "epsilon",
        "iterations", "step", "gate_threshold", "huber_delta",
        "softmin_temperature", "softmin_neighbors", "norm_smoothing",
        "sdf_rebuild_every", "sdf_cell", "sdf_padding"}},
      {"retrieval",
       {"lambda_fit", "lambda_cont", "lambda_pene", "iterations", "step",
        "norm_smoothing", "softmin_temperature", "softmin_neighbors",
        "sdf_cell", "sdf_padding"}},
      {"llm",
       {"base_url", "model", "timeout_seconds", "max_retries", "api_key_env",
        "recorded_responses"}},
  };
  return keys;
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

int get_positive_int(const TomlDoc& doc, const std::string& section,
                     const std::string& key, int fallback) {
  const std::int64_t value = doc.get_int(section, key, fallback);
  if (value < 1) {
    throw ConfigError("config key '" + section + "." + key +
                      "' must be >= 1");
  }
  return static_cast<int>(value);
}

void check_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("missing " + what + " path");
  if (!fs::exists(path)) {
    throw ConfigError(what + " does not exist: " + path);
  }
}

}  // namespace

void RolloutConfig::validate() const {
  check_file(rig_path, "rig");
  check_file(db_path, "interaction database");
  check_file(clips_path, "clip library");
  if (!lexicon_path.empty()) check_file(lexicon_path, "lexicon");
  if (text.empty()) throw ConfigError("missing rollout text");
  if (planner != "rules" && planner != "llm") {
    throw ConfigError("planner must be \"rules\" or \"llm\", got \"" +
                      planner + "\"");
  }
  if (dynamics != "oracle") check_file(dynamics, "dynamics net");
  if (dynamics0 != "oracle") check_file(dynamics0, "initial dynamics net");
  if (output_dir.empty()) throw ConfigError("missing output_dir");
  if (contact_threshold <= 0.0) {
    throw ConfigError("contact_threshold must be positive");
  }
  try {
    dynamics_config.validate();
    refine_config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (planner == "llm") {
    if (llm.base_url.empty() || llm.model.empty()) {
      throw ConfigError("llm planner needs llm.base_url and llm.model");
    }
    if (!llm.recorded_responses.empty()) {
      check_file(llm.recorded_responses, "recorded LLM fixture");
    }
  }
}

RolloutConfig parse_rollout_config(const std::string& toml_text,
                                   const std::string& base_dir) {
  TomlDoc doc;
  try {
    doc = TomlDoc::parse(toml_text);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  for (const std::string& section : doc.sections()) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const std::string& key : doc.keys(section)) {
      if (known->second.count(key) == 0) {
        throw ConfigError("unknown config key '" +
                          (section.empty() ? key : section + "." + key) +
                          "'");
      }
    }
  }

  RolloutConfig config;
  try {
    config.text = doc.get_string("", "text", "");
    config.planner = doc.get_string("", "planner", config.planner);
    config.dynamics = doc.get_string("", "dynamics", config.dynamics);
    config.dynamics0 = doc.get_string("", "dynamics0", config.dynamics0);
    config.seed = doc.get_u64("", "seed", config.seed);
    config.output_dir = doc.get_string("", "output_dir", "");
    config.write_obj_frames =
        doc.get_bool("", "write_obj_frames", config.write_obj_frames);
    config.contact_threshold =
        doc.get_double("", "contact_threshold", config.contact_threshold);

    config.rig_path = doc.get_string("paths", "rig", "");
    config.db_path = doc.get_string("paths", "db", "");
    config.clips_path = doc.get_string("paths", "clips", "");
    config.lexicon_path = doc.get_string("paths", "lexicon", "");

    auto& dyn = config.dynamics_config;
    dyn.m = get_positive_int(doc, "dynamics_config", "m", dyn.m);
    dyn.history =
        get_positive_int(doc, "dynamics_config", "history", dyn.history);
    dyn.future = get_positive_int(doc, "dynamics_config", "future", dyn.future);
    dyn.history0 =
        get_positive_int(doc, "dynamics_config", "history0", dyn.history0);
    dyn.future0 =
        get_positive_int(doc, "dynamics_config", "future0", dyn.future0);
    dyn.delta1 = doc.get_double("dynamics_config", "delta1", dyn.delta1);
    dyn.delta2 = doc.get_double("dynamics_config", "delta2", dyn.delta2);

    auto& ref = config.refine_config;
    ref.lambda_fit = doc.get_double("refine", "lambda_fit", ref.lambda_fit);
    ref.lambda_vel = doc.get_double("refine", "lambda_vel", ref.lambda_vel);
    ref.lambda_cont = doc.get_double("refine", "lambda_cont", ref.lambda_cont);
    ref.lambda_pene = doc.get_double("refine", "lambda_pene", ref.lambda_pene);
    ref.epsilon = doc.get_double("refine", "epsilon", ref.epsilon);
    ref.iterations = static_cast<int>(
        doc.get_int("refine", "iterations", ref.iterations));
    ref.step = doc.get_double("refine", "step", ref.step);
    ref.gate_threshold =
        doc.get_double("refine", "gate_threshold", ref.gate_threshold);
    ref.huber_delta = doc.get_double("refine", "huber_delta", ref.huber_delta);
    ref.softmin_temperature = doc.get_double("refine", "softmin_temperature",
                                             ref.softmin_temperature);
    ref.softmin_neighbors = get_positive_int(doc, "refine",
                                             "softmin_neighbors",
                                             ref.softmin_neighbors);
    ref.norm_smoothing =
        doc.get_double("refine", "norm_smoothing", ref.norm_smoothing);
    ref.sdf_rebuild_every = get_positive_int(doc, "refine",
                                             "sdf_rebuild_every",
                                             ref.sdf_rebuild_every);
    ref.sdf_cell = doc.get_double("refine", "sdf_cell", ref.sdf_cell);
    ref.sdf_padding = doc.get_double("refine", "sdf_padding", ref.sdf_padding);

    auto& ret = config.retrieval_weights;
    ret.lambda_fit = doc.get_double("retrieval", "lambda_fit", ret.lambda_fit);
    ret.lambda_cont =
        doc.get_double("retrieval", "lambda_cont", ret.lambda_cont);
    ret.lambda_pene =
        doc.get_double("retrieval", "lambda_pene", ret.lambda_pene);
    ret.iterations = static_cast<int>(
        doc.get_int("retrieval", "iterations", ret.iterations));
    ret.step = doc.get_double("retrieval", "step", ret.step);
    ret.norm_smoothing =
        doc.get_double("retrieval", "norm_smoothing", ret.norm_smoothing);
    ret.softmin_temperature = doc.get_double(
        "retrieval", "softmin_temperature", ret.softmin_temperature);
    ret.softmin_neighbors = get_positive_int(doc, "retrieval",
                                             "softmin_neighbors",
                                             ret.softmin_neighbors);
    ret.sdf_cell = doc.get_double("retrieval", "sdf_cell", ret.sdf_cell);
    ret.sdf_padding =
        doc.get_double("retrieval", "sdf_padding", ret.sdf_padding);

    config.llm.base_url = doc.get_string("llm", "base_url", "");
    config.llm.model = doc.get_string("llm", "model", "");
    config.llm.timeout_seconds =
        doc.get_double("llm", "timeout_seconds", config.llm.timeout_seconds);
    config.llm.max_retries = static_cast<int>(
        doc.get_int("llm", "max_retries", config.llm.max_retries));
    config.llm.api_key_env = doc.get_string("llm", "api_key_env", "");
    config.llm.recorded_responses =
        doc.get_string("llm", "recorded_responses", "");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  config.rig_path = resolve(base_dir, config.rig_path);
  config.db_path = resolve(base_dir, config.db_path);
  config.clips_path = resolve(base_dir, config.clips_path);
  config.lexicon_path = resolve(base_dir, config.lexicon_path);
  config.output_dir = resolve(base_dir, config.output_dir);
  if (config.dynamics != "oracle") {
    config.dynamics = resolve(base_dir, config.dynamics);
  }
  if (config.dynamics0 != "oracle") {
    config.dynamics0 = resolve(base_dir, config.dynamics0);
  }
  if (!config.llm.recorded_responses.empty()) {
    config.llm.recorded_responses =
        resolve(base_dir, config.llm.recorded_responses);
  }
  return config;
}

RolloutConfig load_rollout_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_rollout_config(buffer.str(),
                              fs::path(path).parent_path().string());
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
  // splitmix64 step over the golden-ratio stream.
  std::uint64_t z = global_seed + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace hoisynth::pipeline
