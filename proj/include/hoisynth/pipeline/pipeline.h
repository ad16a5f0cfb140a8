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

#ifndef HOISYNTH_PIPELINE_PIPELINE_H_
#define HOISYNTH_PIPELINE_PIPELINE_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/mesh.h"
#include "hoisynth/motion/motion.h"
#include "hoisynth/planning/planning.h"
#include "hoisynth/refine/refine.h"
#include "hoisynth/retrieval/retrieval.h"
#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::pipeline {

// Configuration problems (missing files, bad values). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rollout stage failed; carries the stage name. CLI exit code 3.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// LLM planner settings ([llm] config section). When recorded_responses
// names a fixture file the planner replays it and never touches the
// network.
struct LlmConfig {
  std::string base_url;
  std::string model;
  double timeout_seconds = 30.0;
  int max_retries = 2;
  std::string api_key_env;
  std::string recorded_responses;
};

// Full rollout configuration (TOML). Relative paths are resolved against
// the config file's directory at load time.
struct RolloutConfig {
  std::string rig_path;
  std::string db_path;       // interaction database directory
  std::string clips_path;    // clip library directory
  std::string lexicon_path;  // optional; built-in vocabulary when empty

  std::string text;
  std::string planner = "rules";     // "rules" | "llm"
  std::string dynamics = "oracle";   // "oracle" | dynamics-net file
  std::string dynamics0 = "oracle";  // first-step model (H0/F0 horizons)
  std::uint64_t seed = 1;
  std::string output_dir;
  bool write_obj_frames = false;
  double contact_threshold = 0.03;  // meters, contact-profile radius

  worldmodel::DynamicsConfig dynamics_config;
  refine::RefineConfig refine_config;
  retrieval::RetrievalWeights retrieval_weights;
  LlmConfig llm;

  void validate() const;  // throws ConfigError
};

// Parses a TOML document; paths are resolved against base_dir. Unknown
// keys are rejected so typos surface immediately.
RolloutConfig parse_rollout_config(const std::string& toml_text,
                                   const std::string& base_dir);
RolloutConfig load_rollout_config(const std::string& path);

// Everything a rollout reads from disk.
struct RolloutAssets {
  body::BodyRig rig;
  retrieval::InteractionDB db;
  motion::MotionClipLibrary clips;
  planning::Lexicon lexicon;
};
RolloutAssets load_assets(const RolloutConfig& config);

// Per-segment provenance.
struct SegmentInfo {
  int start = 0;   // first frame index
  int frames = 0;  // frame count
  bool gated = false;    // refinement skipped: energy under the gate
  bool refined = false;  // refinement ran on this segment's window
  std::string dynamics;  // backend that produced the object frames
};

// A synthesized human-object sequence. Human and object frame counts and
// rates are equal; frames concatenate the emitted segments in order.
struct InteractionSequence {
  body::PoseSequence human;
  worldmodel::ObjectStateSeq object;
  std::string category;
  std::vector<SegmentInfo> segments;

  int frame_count() const { return static_cast<int>(human.frames.size()); }
};

// Full synthesis: plan -> initial action -> retrieval -> iterate {action,
// world-model step, refinement window}. Deterministic per (config, seed).
// A stage failure persists a failure report (and any partial sequence) to
// the output directory, then throws StageError.
InteractionSequence run_rollout(const RolloutConfig& config,
                                const RolloutAssets& assets);
InteractionSequence run_rollout(const RolloutConfig& config);

// Fraction of frames, per rig part, in which any vertex of the part lies
// within `threshold` meters of the posed object (nearest object vertex).
struct ContactProfile {
  std::vector<double> fractions;  // one per rig part, each in [0, 1]
};
ContactProfile contact_profile(const body::BodyRig& rig,
                               const geom::TriMesh& object_mesh,
                               const InteractionSequence& seq,
                               double threshold);

// Mean absolute per-part difference of two contact profiles.
double metric_cmd(const ContactProfile& generated,
                  const ContactProfile& reference);

// Mean over frames of the fraction of object vertices strictly inside
// the posed body (on-surface vertices count as outside).
double metric_pene(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                   const InteractionSequence& seq);

// (translation error in millimeters, geodesic rotation error in radians),
// each averaged over frames.
std::pair<double, double> metric_pose_err(const worldmodel::ObjectStateSeq& pred,
                                          const worldmodel::ObjectStateSeq& gt);

struct ExportOptions {
  bool write_obj_frames = false;  // frames/frame_NNNNNN.obj, body + object
  double contact_threshold = 0.03;
  // Reference sequence enabling cmd / trans_err / rot_err in the report;
  // without it those fields are null.
  const InteractionSequence* reference = nullptr;
};

// Writes sequence.jsonl ({t, human:{root_t, joint_r}, object:{R, t}} per
// frame, R row-major), metrics.json, and optional per-frame OBJ meshes.
// Byte-reproducible for identical inputs.
void export_sequence(const InteractionSequence& seq, const body::BodyRig& rig,
                     const geom::TriMesh& object_mesh, const std::string& dir,
                     const ExportOptions& options = {});

// Reads back an exported directory (sequence.jsonl + metrics.json).
InteractionSequence import_sequence(const std::string& dir);

// Deterministic per-item seed for eval workers.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index);

struct EvalOutcome {
  int index = 0;
  std::string text;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int frames = 0;
  double pene = 0.0;
  std::string output_dir;
};

// Runs one rollout per text in a pool of `workers` threads, each with a
// seed derived from config.seed and its index, exporting to
// output_dir/item_<index>/ and writing output_dir/eval_report.json.
// Outcomes are index-ordered and independent of scheduling.
std::vector<EvalOutcome> run_eval(const RolloutConfig& config,
                                  const std::vector<std::string>& texts,
                                  int workers);

// Writes the self-contained demo fixture (rig, crate template, contact
// database, clip library, lexicon, rollout.toml) into dir and returns the
// config path. The fixture is a two-handed crate lift with a feasible
// flush grasp.
std::string write_demo_fixture(const std::string& dir);

}  // namespace hoisynth::pipeline

#endif  // HOISYNTH_PIPELINE_PIPELINE_H_
