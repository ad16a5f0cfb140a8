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

#ifndef HOISYNTH_MOTION_MOTION_H_
#define HOISYNTH_MOTION_MOTION_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/transform.h"
#include "hoisynth/planning/planning.h"

namespace hoisynth::motion {

// One emitted motion segment: up to m consecutive body poses. end_flag
// marks the final segment of the sequence (the only one allowed to be
// shorter than m).
struct Action {
  std::vector<body::BodyPose> frames;
  bool end_flag = false;
};

// What an action provider can emit.
struct ProviderInfo {
  int segment_frames = 0;       // m, frames per action
  int max_sequence_length = 0;  // longest sequence the provider can produce
  double frame_rate = 0.0;
};

// Low-level motion interface: emits m-frame actions conditioned on a
// plan. Implementations must be deterministic given (plan, seed); the
// object state parameter lets stateful implementations react to the
// world, though the bundled clip provider ignores it and leaves coupling
// to the refinement stage.
class ActionProvider {
 public:
  virtual ~ActionProvider() = default;
  virtual ProviderInfo info() const = 0;
  virtual Action initial_action(const planning::Plan& plan,
                                std::uint64_t seed) = 0;
  // `history` must be non-empty (it starts with the initial action).
  // Calling again after an action with end_flag was emitted is an error.
  virtual Action next_action(const geom::RigidTransform& object_state,
                             const std::vector<Action>& history,
                             const planning::Plan& plan,
                             std::uint64_t seed) = 0;
};

// One stored motion clip: a pose sequence, lowercase search tags, and the
// candidate end frames realizing variable sequence length.
struct MotionClip {
  body::PoseSequence sequence;
  std::vector<std::string> tags;
  std::vector<int> end_positions;  // valid final-frame indices
};

// Tag-indexed clip store. Frame rates are uniform across clips (pinned by
// the first ingested clip).
struct MotionClipLibrary {
  std::vector<MotionClip> clips;
  std::map<std::string, std::vector<int>> tag_index;
  double frame_rate = 0.0;  // 0 until the first clip arrives
};

// Validates and stores a clip, indexing it under every (lowercased) tag;
// returns the clip id. Throws on an empty sequence, no tags, frame-rate
// mismatch with the library, or an out-of-range end position. An empty
// end-position list means the clip may only end at its last frame.
int ingest_clip(MotionClipLibrary& library, const body::PoseSequence& sequence,
                const std::vector<std::string>& tags,
                const std::vector<int>& end_positions);

// Clip ids indexed under the tag (case-insensitive); empty when unknown.
std::vector<int> query_clips(const MotionClipLibrary& library,
                             const std::string& tag);

// Directory layout: clip_<id>.jsonl per clip (pose-sequence JSON lines)
// plus manifest.json {frame_rate, clips:[{file, tags, end_positions}]}.
void save_clip_library(const MotionClipLibrary& library,
                       const std::string& dir);
MotionClipLibrary load_clip_library(const std::string& dir);

// Deterministic clip-playback provider. Clip choice scores tag overlap
// with the plan's keywords (object category plus the standardized-text
// words, inflection-tolerant); max-score ties and the end position are
// resolved by draws from a generator seeded with `seed`, so the whole
// action stream is a pure function of (library, plan, seed). The cursor
// is derived from `history`, making the provider stateless.
class ClipActionProvider : public ActionProvider {
 public:
  // `library` must outlive the provider. segment_frames is m >= 1.
  ClipActionProvider(const MotionClipLibrary* library, int segment_frames);

  ProviderInfo info() const override;
  Action initial_action(const planning::Plan& plan,
                        std::uint64_t seed) override;
  Action next_action(const geom::RigidTransform& object_state,
                     const std::vector<Action>& history,
                     const planning::Plan& plan, std::uint64_t seed) override;

  // Exposed for tests: the (clip id, end frame) the seed resolves to.
  std::pair<int, int> select(const planning::Plan& plan,
                             std::uint64_t seed) const;

 private:
  Action emit(const planning::Plan& plan, std::uint64_t seed,
              int cursor) const;
  const MotionClipLibrary* library_;
  int segment_frames_;
};

}  // namespace hoisynth::motion

#endif  // HOISYNTH_MOTION_MOTION_H_
