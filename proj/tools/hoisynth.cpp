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

// Command-line front end: plan / retrieve / rollout / train-dynamics /
// eval / export. Exit codes: 0 success, 2 configuration or usage error,
// 3 stage failure.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/transform.h"
#include "hoisynth/motion/motion.h"
#include "hoisynth/pipeline/pipeline.h"
#include "hoisynth/planning/planning.h"
#include "hoisynth/retrieval/retrieval.h"
#include "hoisynth/synth/carry.h"
#include "hoisynth/synth/primitives.h"
#include "hoisynth/worldmodel/dynamics.h"

namespace {

using hoisynth::pipeline::ConfigError;
using hoisynth::pipeline::StageError;
using nlohmann::json;

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

LogLevel g_log_level = LogLevel::kInfo;

LogLevel parse_log_level(const std::string& name) {
  if (name == "debug") return LogLevel::kDebug;
  if (name == "info") return LogLevel::kInfo;
  if (name == "warn") return LogLevel::kWarn;
  if (name == "error") return LogLevel::kError;
  throw ConfigError("unknown log level '" + name +
                    "' (expected debug, info, warn, or error)");
}

void log_at(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) < static_cast<int>(g_log_level)) return;
  static const char* const kNames[] = {"debug", "info", "warn", "error"};
  std::clog << "[" << kNames[static_cast<int>(level)] << "] " << message
            << std::endl;
}

void log_debug(const std::string& m) { log_at(LogLevel::kDebug, m); }
void log_info(const std::string& m) { log_at(LogLevel::kInfo, m); }
void log_error(const std::string& m) { log_at(LogLevel::kError, m); }

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

hoisynth::pipeline::RolloutConfig load_config(const GlobalOptions& global) {
  if (global.config_path.empty()) {
    throw ConfigError("--config is required for this subcommand");
  }
  hoisynth::pipeline::RolloutConfig config =
      hoisynth::pipeline::load_rollout_config(global.config_path);
  if (global.seed) config.seed = *global.seed;
  log_debug("config: " + global.config_path + " (seed " +
            std::to_string(config.seed) + ")");
  return config;
}

json vec3_to_json(const hoisynth::geom::Vec3& v) {
  return json::array({v.x(), v.y(), v.z()});
}

json rotation_to_json(const hoisynth::geom::Mat3& r) {
  json out = json::array();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) out.push_back(r(row, col));
  }
  return out;
}

json plan_to_json(const hoisynth::planning::Plan& plan) {
  return json{{"category", plan.object_category},
              {"contact_parts", plan.contact_parts},
              {"standardized_text", plan.standardized_text},
              {"thoughts", plan.intermediate_thoughts}};
}

// Runs the configured planner, mirroring the rollout's plan stage.
hoisynth::planning::Plan run_planner(
    const hoisynth::pipeline::RolloutConfig& config,
    const hoisynth::planning::Lexicon& lexicon) {
  if (config.planner == "rules") {
    return hoisynth::planning::plan_rules(config.text, lexicon);
  }
  hoisynth::planning::LlmEndpoint endpoint;
  endpoint.base_url = config.llm.base_url;
  endpoint.model = config.llm.model;
  endpoint.timeout_seconds = config.llm.timeout_seconds;
  endpoint.max_retries = config.llm.max_retries;
  endpoint.api_key_env = config.llm.api_key_env;
  std::unique_ptr<hoisynth::planning::RecordedLlmTransport> recorded;
  if (!config.llm.recorded_responses.empty()) {
    recorded = std::make_unique<hoisynth::planning::RecordedLlmTransport>(
        hoisynth::planning::load_recorded_responses(
            config.llm.recorded_responses));
  }
  return hoisynth::planning::plan_llm(
      endpoint, hoisynth::planning::default_prompt_template(), lexicon,
      config.text, recorded.get());
}

int cmd_plan(const GlobalOptions& global, const std::string& text,
             const std::string& planner_override) {
  hoisynth::pipeline::RolloutConfig config;
  hoisynth::planning::Lexicon lexicon;
  if (!global.config_path.empty()) {
    config = load_config(global);
    lexicon = config.lexicon_path.empty()
                  ? hoisynth::planning::default_lexicon()
                  : hoisynth::planning::load_lexicon(config.lexicon_path);
  } else {
    lexicon = hoisynth::planning::default_lexicon();
  }
  if (!planner_override.empty()) config.planner = planner_override;
  if (config.planner != "rules" && config.planner != "llm") {
    throw ConfigError("unknown planner '" + config.planner +
                      "' (expected \"rules\" or \"llm\")");
  }
  if (config.planner == "llm" && config.llm.base_url.empty()) {
    throw ConfigError(
        "the llm planner needs --config with an [llm] endpoint");
  }
  config.text = text;

  hoisynth::planning::Plan plan;
  try {
    plan = run_planner(config, lexicon);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("plan", e.what());
  }
  std::cout << plan_to_json(plan).dump(2) << std::endl;
  return 0;
}

int cmd_retrieve(const GlobalOptions& global, const std::string& text) {
  hoisynth::pipeline::RolloutConfig config = load_config(global);
  if (!text.empty()) config.text = text;
  const hoisynth::pipeline::RolloutAssets assets =
      hoisynth::pipeline::load_assets(config);

  std::string stage = "plan";
  try {
    const hoisynth::planning::Plan plan = run_planner(config, assets.lexicon);

    // The contact maps are fit against the first posed frame of the motion
    // the planner selects, exactly as the rollout does.
    stage = "motion";
    hoisynth::motion::ClipActionProvider provider(&assets.clips,
                                                  config.dynamics_config.m);
    const hoisynth::motion::Action action =
        provider.initial_action(plan, config.seed);

    stage = "retrieval";
    const auto template_it =
        assets.db.object_templates.find(plan.object_category);
    if (template_it == assets.db.object_templates.end()) {
      throw std::runtime_error("no object template for category '" +
                               plan.object_category + "'");
    }
    const hoisynth::geom::TriMesh posed_body{
        hoisynth::body::skin(assets.rig, action.frames.front()),
        assets.rig.template_mesh.faces, assets.rig.template_mesh.watertight};
    std::vector<hoisynth::retrieval::RetrievalResult> candidates;
    for (const std::string& part : plan.contact_parts) {
      const std::vector<int> part_ids =
          hoisynth::body::part_vertices(assets.rig, part);
      for (const hoisynth::retrieval::ContactMap& map :
           hoisynth::retrieval::query(assets.db, part, plan.object_category)) {
        candidates.push_back(hoisynth::retrieval::fit_initial_pose(
            map, posed_body, part_ids, template_it->second,
            config.retrieval_weights));
      }
    }
    if (candidates.empty()) {
      throw std::runtime_error("no contact maps for category '" +
                               plan.object_category + "'");
    }
    const hoisynth::retrieval::RetrievalResult chosen =
        hoisynth::retrieval::select_pose(candidates, config.seed);

    json out{{"plan", plan_to_json(plan)},
             {"candidates", candidates.size()},
             {"object_state",
              {{"R", rotation_to_json(chosen.object_state.rotation)},
               {"t", vec3_to_json(chosen.object_state.translation)}}},
             {"e_fit", chosen.e_fit},
             {"e_cont", chosen.e_cont},
             {"e_pene", chosen.e_pene},
             {"score", chosen.score}};
    std::cout << out.dump(2) << std::endl;
    return 0;
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

int cmd_rollout(const GlobalOptions& global, const std::string& text) {
  hoisynth::pipeline::RolloutConfig config = load_config(global);
  if (!text.empty()) config.text = text;
  const hoisynth::pipeline::RolloutAssets assets =
      hoisynth::pipeline::load_assets(config);
  log_info("rollout: \"" + config.text + "\" (seed " +
           std::to_string(config.seed) + ")");

  const hoisynth::pipeline::InteractionSequence seq =
      hoisynth::pipeline::run_rollout(config, assets);

  hoisynth::pipeline::ExportOptions options;
  options.write_obj_frames = config.write_obj_frames;
  options.contact_threshold = config.contact_threshold;
  hoisynth::pipeline::export_sequence(
      seq, assets.rig, assets.db.object_templates.at(seq.category),
      config.output_dir, options);
  log_info("wrote " + config.output_dir + "/sequence.jsonl and metrics.json");

  int gated = 0;
  int refined = 0;
  for (const auto& segment : seq.segments) {
    gated += segment.gated ? 1 : 0;
    refined += segment.refined ? 1 : 0;
  }
  json out{{"category", seq.category},
           {"frames", seq.human.frames.size()},
           {"segments", seq.segments.size()},
           {"gated_segments", gated},
           {"refined_segments", refined},
           {"output_dir", config.output_dir}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_train_dynamics(const GlobalOptions& global, const std::string& corpus,
                       int synthetic, int history, int future,
                       const std::string& out_path,
                       hoisynth::worldmodel::TrainOptions options) {
  if (global.seed) options.seed = *global.seed;
  std::vector<hoisynth::worldmodel::TrainingSegment> dataset;
  if (!corpus.empty()) {
    dataset = hoisynth::worldmodel::load_corpus(corpus);
    log_info("loaded " + std::to_string(dataset.size()) + " segments from " +
             corpus);
  } else {
    const hoisynth::geom::TriMesh object = hoisynth::synth::make_box_mesh(
        hoisynth::geom::Vec3::Zero(), hoisynth::geom::Vec3(0.15, 0.1, 0.1));
    dataset = hoisynth::synth::make_welded_carry_corpus(
        object, history, future, synthetic, options.seed);
    log_info("generated " + std::to_string(dataset.size()) +
             " synthetic carry segments (H=" + std::to_string(history) +
             ", F=" + std::to_string(future) + ")");
  }

  hoisynth::worldmodel::DynamicsConfig config;
  config.history = history;
  config.future = future;
  std::string stage = "dynamics";
  try {
    const hoisynth::worldmodel::TrainResult result =
        hoisynth::worldmodel::train_dynamics(dataset, config, options);
    hoisynth::worldmodel::save_dynamics_net(result.net, out_path);
    json out{{"segments", dataset.size()},
             {"epochs", options.epochs},
             {"first_epoch_loss", result.first_epoch_loss},
             {"final_loss", result.final_loss},
             {"net", out_path}};
    std::cout << out.dump(2) << std::endl;
    return 0;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

int cmd_eval(const GlobalOptions& global, const std::string& texts_path,
             int workers) {
  const hoisynth::pipeline::RolloutConfig config = load_config(global);
  std::ifstream in(texts_path);
  if (!in) {
    throw ConfigError("cannot open texts file '" + texts_path + "'");
  }
  std::vector<std::string> texts;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) texts.push_back(line);
  }
  if (texts.empty()) {
    throw ConfigError("texts file '" + texts_path + "' has no prompts");
  }
  log_info("evaluating " + std::to_string(texts.size()) + " prompts with " +
           std::to_string(workers) + " worker(s)");

  const std::vector<hoisynth::pipeline::EvalOutcome> outcomes =
      hoisynth::pipeline::run_eval(config, texts, workers);
  int ok = 0;
  json items = json::array();
  for (const auto& outcome : outcomes) {
    ok += outcome.ok ? 1 : 0;
    items.push_back(json{{"index", outcome.index},
                         {"text", outcome.text},
                         {"ok", outcome.ok},
                         {"frames", outcome.frames},
                         {"pene", outcome.pene},
                         {"error", outcome.error}});
  }
  json out{{"items", items},
           {"ok", ok},
           {"failed", outcomes.size() - ok},
           {"report", config.output_dir + "/eval_report.json"}};
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_export(const GlobalOptions& global, const std::string& in_dir,
               const std::string& out_dir, bool write_obj,
               const std::string& reference_dir) {
  const hoisynth::pipeline::RolloutConfig config = load_config(global);
  const hoisynth::pipeline::RolloutAssets assets =
      hoisynth::pipeline::load_assets(config);

  std::string stage = "export";
  try {
    const hoisynth::pipeline::InteractionSequence seq =
        hoisynth::pipeline::import_sequence(in_dir);
    const auto template_it = assets.db.object_templates.find(seq.category);
    if (template_it == assets.db.object_templates.end()) {
      throw std::runtime_error("no object template for category '" +
                               seq.category + "'");
    }
    std::optional<hoisynth::pipeline::InteractionSequence> reference;
    if (!reference_dir.empty()) {
      reference = hoisynth::pipeline::import_sequence(reference_dir);
    }
    hoisynth::pipeline::ExportOptions options;
    options.write_obj_frames = write_obj;
    options.contact_threshold = config.contact_threshold;
    if (reference) options.reference = &*reference;
    hoisynth::pipeline::export_sequence(seq, assets.rig, template_it->second,
                                        out_dir, options);
    json out{{"frames", seq.human.frames.size()},
             {"category", seq.category},
             {"output_dir", out_dir}};
    std::cout << out.dump(2) << std::endl;
    return 0;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-guided human-object interaction synthesis"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Rollout config (TOML)");
  app.add_option("--seed", global.seed, "Override the config seed");
  app.add_option("--log-level", global.log_level,
                 "debug, info, warn, or error")
      ->default_str("info");

  std::string plan_text;
  std::string plan_planner;
  CLI::App* plan = app.add_subcommand(
      "plan", "Parse a prompt into an object category and contact parts");
  plan->add_option("--text", plan_text, "Prompt to plan")->required();
  plan->add_option("--planner", plan_planner, "rules or llm");

  std::string retrieve_text;
  CLI::App* retrieve = app.add_subcommand(
      "retrieve", "Fit the initial object pose from the contact database");
  retrieve->add_option("--text", retrieve_text,
                       "Prompt (defaults to the config's text)");

  std::string rollout_text;
  CLI::App* rollout = app.add_subcommand(
      "rollout", "Synthesize a full interaction sequence and export it");
  rollout->add_option("--text", rollout_text,
                      "Prompt (defaults to the config's text)");

  std::string train_corpus;
  std::string train_out = "dynamics_net.bin";
  int train_synthetic = 2000;
  int train_history = 4;
  int train_future = 12;
  hoisynth::worldmodel::TrainOptions train_options;
  CLI::App* train = app.add_subcommand(
      "train-dynamics", "Train the object dynamics net and save it");
  train->add_option("--corpus", train_corpus,
                    "Training corpus (JSON lines); synthesized when omitted");
  train->add_option("--synthetic", train_synthetic,
                    "Synthetic segment count when no corpus is given");
  train->add_option("--history", train_history, "History frames H");
  train->add_option("--future", train_future, "Future frames F");
  train->add_option("--epochs", train_options.epochs, "Training epochs");
  train->add_option("--batch", train_options.batch_size, "Minibatch size");
  train->add_option("--lr", train_options.learning_rate, "Learning rate");
  train->add_option("--out", train_out, "Output net file");

  std::string eval_texts;
  int eval_workers = 1;
  CLI::App* eval = app.add_subcommand(
      "eval", "Run rollouts for a list of prompts under a worker pool");
  eval->add_option("--texts", eval_texts, "Prompt file, one per line")
      ->required();
  eval->add_option("--workers", eval_workers, "Worker thread count");

  std::string export_in;
  std::string export_out;
  std::string export_reference;
  bool export_obj = false;
  CLI::App* exporter = app.add_subcommand(
      "export", "Re-export a saved sequence (OBJ frames, reference metrics)");
  exporter->add_option("--in", export_in, "Exported sequence directory")
      ->required();
  exporter->add_option("--out", export_out, "Destination directory")
      ->required();
  exporter->add_flag("--obj", export_obj, "Write per-frame OBJ meshes");
  exporter->add_option("--reference", export_reference,
                       "Reference sequence directory for error metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    g_log_level = parse_log_level(global.log_level);
    if (*plan) return cmd_plan(global, plan_text, plan_planner);
    if (*retrieve) return cmd_retrieve(global, retrieve_text);
    if (*rollout) return cmd_rollout(global, rollout_text);
    if (*train) {
      return cmd_train_dynamics(global, train_corpus, train_synthetic,
                                train_history, train_future, train_out,
                                train_options);
    }
    if (*eval) return cmd_eval(global, eval_texts, eval_workers);
    if (*exporter) {
      return cmd_export(global, export_in, export_out, export_obj,
                        export_reference);
    }
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    log_error(std::string("config error: ") + e.what());
    return 2;
  } catch (const StageError& e) {
    log_error(std::string("stage failure: ") + e.what());
    return 3;
  } catch (const std::exception& e) {
    log_error(std::string("failure: ") + e.what());
    return 3;
  }
}
