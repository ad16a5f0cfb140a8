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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "hoisynth/motion/motion.h"
#include "hoisynth/pipeline/pipeline.h"
#include "hoisynth/planning/planning.h"
#include "hoisynth/retrieval/retrieval.h"
#include "hoisynth/synth/boxman.h"
#include "hoisynth/synth/primitives.h"

namespace hoisynth::pipeline {
namespace {

namespace fs = std::filesystem;
using geom::RigidTransform;
using geom::Vec3;

int joint_index(const body::BodyRig& rig, const std::string& name) {
  const auto it =
      std::find(rig.part_names.begin(), rig.part_names.end(), name);
  if (it == rig.part_names.end()) {
    throw std::runtime_error("fixture: rig has no joint named " + name);
  }
  return static_cast<int>(it - rig.part_names.begin());
}

}  // namespace

std::string write_demo_fixture(const std::string& dir) {
  const fs::path base(dir);
  fs::create_directories(base);

  body::BodyRig rig = synth::make_boxman_rig();
  body::save_rig(rig, (base / "rig.json").string(), "boxman.obj");

  // Crate sized so that with both shoulders rotated a quarter turn forward
  // the fists' far faces (z = 0.60 exactly) press flush against its near
  // face: center (0, 1.35, 0.66), half extents (0.24, 0.06, 0.06). The
  // {16,4,4} lattice gives a 0.03 m vertex spacing on every face.
  const geom::TriMesh crate = synth::make_subdivided_box_mesh(
      Vec3(0.0, 0.0, 0.0), Vec3(0.24, 0.06, 0.06), {16, 4, 4});
  RigidTransform crate_pose;
  crate_pose.translation = Vec3(0.0, 1.35, 0.66);

  // Arms-forward pose, held for the whole clip; the root rises 1/64 m per
  // frame so the whole grasp translates rigidly.
  const int left_shoulder = joint_index(rig, "left_shoulder");
  const int right_shoulder = joint_index(rig, "right_shoulder");
  const double half_pi = std::acos(0.0);
  body::PoseSequence clip;
  clip.frame_rate = 30.0;
  constexpr int kFrames = 16;
  for (int f = 0; f < kFrames; ++f) {
    body::BodyPose pose;
    pose.root_translation = Vec3(0.0, static_cast<double>(f) / 64.0, 0.0);
    pose.joint_rotations.assign(static_cast<size_t>(rig.joint_count()),
                                Vec3::Zero());
    pose.joint_rotations[static_cast<size_t>(left_shoulder)] =
        Vec3(0.0, -half_pi, 0.0);
    pose.joint_rotations[static_cast<size_t>(right_shoulder)] =
        Vec3(0.0, half_pi, 0.0);
    clip.frames.push_back(std::move(pose));
  }

  motion::MotionClipLibrary clips;
  motion::ingest_clip(clips, clip, {"lift", "box"}, {kFrames - 1});
  motion::save_clip_library(clips, (base / "clips").string());

  retrieval::InteractionDB db = retrieval::make_interaction_db(rig);
  retrieval::add_object_template(db, "box", crate);
  const std::vector<Vec3> body0 = body::skin(rig, clip.frames[0]);
  retrieval::ingest_frame(db, body0, crate, crate_pose, "left_hand", "box",
                          0.03, "demo");
  retrieval::ingest_frame(db, body0, crate, crate_pose, "right_hand", "box",
                          0.03, "demo");
  retrieval::save_interaction_db(db, (base / "db").string());

  planning::save_lexicon(planning::default_lexicon(),
                         (base / "lexicon.json").string());

  const fs::path config_path = base / "rollout.toml";
  std::ofstream out(config_path);
  if (!out) {
    throw std::runtime_error("cannot write " + config_path.string());
  }
  out << "# Demo: a two-handed crate lift with a flush grasp.\n"
         "text = \"a person lifts the box with both hands\"\n"
         "planner = \"rules\"\n"
         "dynamics = \"oracle\"\n"
         "dynamics0 = \"oracle\"\n"
         "seed = 7\n"
         "output_dir = \"out\"\n"
         "write_obj_frames = false\n"
         "contact_threshold = 0.03\n"
         "\n"
         "[paths]\n"
         "rig = \"rig.json\"\n"
         "db = \"db\"\n"
         "clips = \"clips\"\n"
         "lexicon = \"lexicon.json\"\n";
  out.close();
  return config_path.string();
}

}  // namespace hoisynth::pipeline
