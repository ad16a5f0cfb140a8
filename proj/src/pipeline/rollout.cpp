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
#include <memory>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "hoisynth/geom/sdf.h"
#include "hoisynth/pipeline/pipeline.h"

namespace hoisynth::pipeline {
namespace {

namespace fs = std::filesystem;
using geom::RigidTransform;
using geom::Vec3;

// Grid resolution for the object-template SDF used by control-vertex
// sampling (matches the refinement-stage grid defaults).
constexpr double kControlSdfCell = 0.02;
constexpr double kControlSdfPadding = 0.06;

// One prediction backend: "oracle" or a loaded net.
struct Backend {
  std::string name;  // "oracle" | "net"
  std::optional<worldmodel::DynamicsNet> net;

  worldmodel::ObjectStateSeq step(const worldmodel::ObjectStateSeq& prev,
                                  const worldmodel::ControlSet& controls,
                                  int future_frames) const {
    if (net.has_value()) {
      return worldmodel::learned_step(*net, prev, controls);
    }
    return worldmodel::oracle_step(prev, controls, future_frames);
  }
};

Backend make_backend(const std::string& spec, int history, int future,
                     const std::string& which) {
  Backend backend;
  if (spec == "oracle") {
    backend.name = "oracle";
    return backend;
  }
  backend.name = "net";
  backend.net = worldmodel::load_dynamics_net(spec);
  if (backend.net->history != history || backend.net->future != future) {
    throw ConfigError(which + " net horizons (H=" +
                      std::to_string(backend.net->history) +
                      ", F=" + std::to_string(backend.net->future) +
                      ") disagree with the configured (H=" +
                      std::to_string(history) +
                      ", F=" + std::to_string(future) + ")");
  }
  return backend;
}

// Writes whatever exists of the sequence plus the failing stage, then
// rethrows as a StageError.
[[noreturn]] void persist_failure(const RolloutConfig& config,
                                  const InteractionSequence& partial,
                                  const std::string& stage,
                                  const std::string& message) {
  try {
    fs::create_directories(config.output_dir);
    nlohmann::json report;
    report["stage"] = stage;
    report["error"] = message;
    report["text"] = config.text;
    report["seed"] = config.seed;
    report["human_frames"] = partial.human.frames.size();
    report["object_frames"] = partial.object.frames.size();
    std::ofstream out(fs::path(config.output_dir) / "failure.json");
    out << report.dump(2) << "\n";

    const size_t frames =
        std::min(partial.human.frames.size(), partial.object.frames.size());
    if (frames > 0) {
      InteractionSequence trimmed = partial;
      trimmed.human.frames.resize(frames);
      trimmed.object.frames.resize(frames);
      std::ofstream seq_out(fs::path(config.output_dir) /
                            "partial_sequence.jsonl");
      for (size_t f = 0; f < frames; ++f) {
        nlohmann::json line;
        line["t"] = f;
        const auto& pose = trimmed.human.frames[f];
        line["human"]["root_t"] = {pose.root_translation.x(),
                                   pose.root_translation.y(),
                                   pose.root_translation.z()};
        auto joints = nlohmann::json::array();
        for (const Vec3& r : pose.joint_rotations) {
          joints.push_back({r.x(), r.y(), r.z()});
        }
        line["human"]["joint_r"] = joints;
        const auto& obj = trimmed.object.frames[f];
        auto rot = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) rot.push_back(obj.rotation(r, c));
        }
        line["object"]["R"] = rot;
        line["object"]["t"] = {obj.translation.x(), obj.translation.y(),
                               obj.translation.z()};
        seq_out << line.dump() << "\n";
      }
    }
  } catch (const std::exception&) {
    // Failure reporting must never mask the original error.
  }
  throw StageError(stage, message);
}

// Human vertex positions for frames [begin, end) of the pose list; frames
// past the last known pose hold it (the provider has not emitted them
// yet).
std::vector<std::vector<Vec3>> skinned_window(
    const body::BodyRig& rig, const std::vector<body::BodyPose>& poses,
    int begin, int end) {
  std::vector<std::vector<Vec3>> out;
  const int last = static_cast<int>(poses.size()) - 1;
  for (int f = begin; f < end; ++f) {
    const int src = std::min(f, last);
    out.push_back(body::skin(rig, poses[static_cast<size_t>(src)]));
  }
  return out;
}

// Object poses for frames [begin, end); frames past the last known pose
// hold it.
std::vector<RigidTransform> pose_window(
    const std::vector<RigidTransform>& poses, int begin, int end) {
  std::vector<RigidTransform> out;
  const int last = static_cast<int>(poses.size()) - 1;
  for (int f = begin; f < end; ++f) {
    out.push_back(poses[static_cast<size_t>(std::min(f, last))]);
  }
  return out;
}

// Vertex-major trajectories (what control_features consumes) from
// frame-major skinned windows, restricted to the control vertices.
std::vector<std::vector<Vec3>> to_trajectories(
    const std::vector<std::vector<Vec3>>& frames,
    const std::vector<int>& vertex_ids) {
  std::vector<std::vector<Vec3>> trajectories(vertex_ids.size());
  for (size_t j = 0; j < vertex_ids.size(); ++j) {
    trajectories[j].reserve(frames.size());
    for (const auto& frame : frames) {
      trajectories[j].push_back(frame[static_cast<size_t>(vertex_ids[j])]);
    }
  }
  return trajectories;
}

// Predicts the object poses for the `keep` frames following frame
// `segment_start`, given everything known so far.
std::vector<RigidTransform> predict_segment(
    const body::BodyRig& rig, const geom::TriMesh& object_template,
    const geom::SdfGrid& template_sdf, const RolloutConfig& config,
    const Backend& backend, const std::vector<body::BodyPose>& human,
    const std::vector<RigidTransform>& object, double frame_rate, int history,
    int future, int segment_start, int keep) {
  const int history_begin = std::max(0, segment_start - history);
  const int history_len = segment_start - history_begin;

  worldmodel::ObjectStateSeq prev;
  prev.frame_rate = frame_rate;
  for (int f = history_begin; f < segment_start; ++f) {
    prev.frames.push_back(object[static_cast<size_t>(f)]);
  }

  // Control vertices are chosen on the history window only.
  const std::vector<std::vector<Vec3>> history_frames =
      skinned_window(rig, human, history_begin, segment_start);
  const std::vector<RigidTransform> history_poses =
      pose_window(object, history_begin, segment_start);
  const std::vector<int> vertex_ids = worldmodel::sample_control_vertices(
      history_frames, template_sdf, history_poses,
      config.dynamics_config.delta1, config.dynamics_config.delta2);

  const int total = history_len + future;
  const std::vector<std::vector<Vec3>> window_frames =
      skinned_window(rig, human, history_begin, history_begin + total);
  const std::vector<RigidTransform> window_poses =
      pose_window(object, history_begin, history_begin + total);
  const worldmodel::ControlSet controls = worldmodel::control_features(
      rig, vertex_ids, to_trajectories(window_frames, vertex_ids),
      object_template, window_poses);

  const worldmodel::ObjectStateSeq predicted =
      backend.step(prev, controls, future);
  if (static_cast<int>(predicted.frames.size()) < keep) {
    throw std::runtime_error("dynamics produced " +
                             std::to_string(predicted.frames.size()) +
                             " frames, needed " + std::to_string(keep));
  }
  return {predicted.frames.begin(), predicted.frames.begin() + keep};
}

}  // namespace

RolloutAssets load_assets(const RolloutConfig& config) {
  config.validate();
  RolloutAssets assets;
  try {
    assets.rig = body::load_rig(config.rig_path);
    assets.db = retrieval::load_interaction_db(config.db_path);
    assets.clips = motion::load_clip_library(config.clips_path);
    assets.lexicon = config.lexicon_path.empty()
                         ? planning::default_lexicon()
                         : planning::load_lexicon(config.lexicon_path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return assets;
}

InteractionSequence run_rollout(const RolloutConfig& config) {
  return run_rollout(config, load_assets(config));
}

InteractionSequence run_rollout(const RolloutConfig& config,
                                const RolloutAssets& assets) {
  config.validate();
  const worldmodel::DynamicsConfig& dyn = config.dynamics_config;
  const int m = dyn.m;

  InteractionSequence seq;
  seq.human.frame_rate = assets.clips.frame_rate;
  seq.object.frame_rate = assets.clips.frame_rate;

  std::string stage = "config";
  try {
    // Backends are config-derived; report their problems as config errors.
    const Backend backend =
        make_backend(config.dynamics, dyn.history, dyn.future, "dynamics");
    const Backend backend0 = make_backend(config.dynamics0, dyn.history0,
                                          dyn.future0, "initial dynamics");

    // --- plan ---
    stage = "plan";
    planning::Plan plan;
    if (config.planner == "rules") {
      plan = planning::plan_rules(config.text, assets.lexicon);
    } else {
      planning::LlmEndpoint endpoint;
      endpoint.base_url = config.llm.base_url;
      endpoint.model = config.llm.model;
      endpoint.timeout_seconds = config.llm.timeout_seconds;
      endpoint.max_retries = config.llm.max_retries;
      endpoint.api_key_env = config.llm.api_key_env;
      std::unique_ptr<planning::RecordedLlmTransport> recorded;
      if (!config.llm.recorded_responses.empty()) {
        recorded = std::make_unique<planning::RecordedLlmTransport>(
            planning::load_recorded_responses(config.llm.recorded_responses));
      }
      plan = planning::plan_llm(endpoint, planning::default_prompt_template(),
                                assets.lexicon, config.text, recorded.get());
    }
    seq.category = plan.object_category;

    // --- initial action ---
    stage = "motion";
    motion::ClipActionProvider provider(&assets.clips, m);
    std::vector<motion::Action> actions;
    actions.push_back(provider.initial_action(plan, config.seed));
    for (const body::BodyPose& pose : actions.back().frames) {
      seq.human.frames.push_back(pose);
    }

    // --- retrieval: object state at frame 0 ---
    stage = "retrieval";
    const auto template_it = assets.db.object_templates.find(seq.category);
    if (template_it == assets.db.object_templates.end()) {
      throw std::runtime_error("no object template for category '" +
                               seq.category + "'");
    }
    const geom::TriMesh& object_template = template_it->second;
    const geom::TriMesh posed_body{body::skin(assets.rig,
                                              seq.human.frames.front()),
                                   assets.rig.template_mesh.faces,
                                   assets.rig.template_mesh.watertight};
    std::vector<retrieval::RetrievalResult> candidates;
    for (const std::string& part : plan.contact_parts) {
      const std::vector<int> part_ids = body::part_vertices(assets.rig, part);
      for (const retrieval::ContactMap& map :
           retrieval::query(assets.db, part, seq.category)) {
        candidates.push_back(retrieval::fit_initial_pose(
            map, posed_body, part_ids, object_template,
            config.retrieval_weights));
      }
    }
    if (candidates.empty()) {
      std::string parts;
      for (const std::string& part : plan.contact_parts) {
        parts += (parts.empty() ? "" : ", ") + part;
      }
      throw std::runtime_error("no contact maps for category '" +
                               seq.category + "' and parts [" + parts + "]");
    }
    seq.object.frames.push_back(
        retrieval::select_pose(candidates, config.seed).object_state);

    // --- world model ---
    stage = "dynamics";
    const geom::SdfGrid template_sdf =
        geom::build_sdf(object_template, kControlSdfCell, kControlSdfPadding);

    // Initial step (H0 -> F0) fills the rest of segment one.
    const int first_len = static_cast<int>(actions.back().frames.size());
    if (first_len > 1) {
      const std::vector<RigidTransform> rest = predict_segment(
          assets.rig, object_template, template_sdf, config, backend0,
          seq.human.frames, seq.object.frames, seq.object.frame_rate,
          dyn.history0, dyn.future0, /*segment_start=*/1, first_len - 1);
      seq.object.frames.insert(seq.object.frames.end(), rest.begin(),
                               rest.end());
    }

    // Refinement of the first segment (no previous segment to overlap).
    stage = "refine";
    auto refine_window = [&](int window_start) {
      refine::SequencePair reference;
      reference.human.frame_rate = seq.human.frame_rate;
      reference.object.frame_rate = seq.object.frame_rate;
      for (size_t f = static_cast<size_t>(window_start);
           f < seq.human.frames.size(); ++f) {
        reference.human.frames.push_back(seq.human.frames[f]);
        reference.object.frames.push_back(seq.object.frames[f]);
      }
      const refine::RefineResult result =
          refine::refine(assets.rig, object_template, reference,
                         config.refine_config, config.seed);
      for (size_t i = 0; i < result.refined.human.frames.size(); ++i) {
        seq.human.frames[static_cast<size_t>(window_start) + i] =
            result.refined.human.frames[i];
        seq.object.frames[static_cast<size_t>(window_start) + i] =
            result.refined.object.frames[i];
      }
      return result.gated;
    };

    {
      const bool gated = refine_window(0);
      seq.segments.push_back({0, first_len, gated, !gated,
                              "retrieval+" + backend0.name});
    }

    // --- iterate until the provider raises the end flag ---
    while (!actions.back().end_flag) {
      stage = "motion";
      const motion::Action action = provider.next_action(
          seq.object.frames.back(), actions, plan, config.seed);
      actions.push_back(action);
      if (action.frames.empty()) {
        throw std::runtime_error("provider returned an empty action");
      }
      const int segment_start = static_cast<int>(seq.human.frames.size());
      for (const body::BodyPose& pose : action.frames) {
        seq.human.frames.push_back(pose);
      }
      const int keep = static_cast<int>(action.frames.size());

      stage = "dynamics";
      const std::vector<RigidTransform> predicted = predict_segment(
          assets.rig, object_template, template_sdf, config, backend,
          seq.human.frames, seq.object.frames, seq.object.frame_rate,
          dyn.history, dyn.future, segment_start, keep);
      seq.object.frames.insert(seq.object.frames.end(), predicted.begin(),
                               predicted.end());

      stage = "refine";
      const int window_start = seq.segments.back().start;
      const bool gated = refine_window(window_start);
      seq.segments.push_back({segment_start, keep, gated, !gated,
                              backend.name});
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    persist_failure(config, seq, stage, e.what());
  }
  return seq;
}

}  // namespace hoisynth::pipeline
