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

#include <stdexcept>

#include "hoisynth/geom/registration.h"
#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::worldmodel {

using geom::RigidTransform;
using geom::Vec3;

void DynamicsConfig::validate() const {
  if (m < 1) throw std::runtime_error("dynamics config: m must be >= 1");
  if (history < 1 || future < 1 || history0 < 1 || future0 < 1) {
    throw std::runtime_error("dynamics config: horizons must be >= 1");
  }
  if (future < history) {
    throw std::runtime_error(
        "dynamics config: forecast must cover at least the history length");
  }
  if (future0 < history0) {
    throw std::runtime_error(
        "dynamics config: initial forecast must cover at least its history");
  }
  if (delta1 <= 0.0 || delta2 <= 0.0) {
    throw std::runtime_error("dynamics config: deltas must be positive");
  }
}

ObjectStateSeq oracle_step(const ObjectStateSeq& prev,
                           const ControlSet& controls, int future_frames) {
  if (prev.frames.empty()) {
    throw std::invalid_argument("oracle_step: empty history");
  }
  const int h = static_cast<int>(prev.frames.size());
  const int total = controls.frame_count();
  const int f = controls.count() == 0 ? 0 : total - h;
  if (controls.count() > 0 && f < 1) {
    throw std::invalid_argument(
        "oracle_step: control trajectories do not extend past the history");
  }
  if (controls.count() > 0 && future_frames > 0 && future_frames != f) {
    throw std::invalid_argument(
        "oracle_step: future_frames disagrees with the control trajectories");
  }

  ObjectStateSeq next;
  next.frame_rate = prev.frame_rate;
  const RigidTransform last = prev.frames.back();

  if (controls.count() == 0) {
    // No contact: the object rests where it is.
    next.frames.assign(future_frames > 0 ? future_frames : h, last);
    return next;
  }

  geom::PointSet anchor;
  for (int j = 0; j < controls.count(); ++j) {
    anchor.push_back(controls.trajectories[j][h - 1]);
  }
  for (int i = h; i < total; ++i) {
    geom::PointSet moved;
    for (int j = 0; j < controls.count(); ++j) {
      moved.push_back(controls.trajectories[j][i]);
    }
    RigidTransform step;  // identity when the fit is underdetermined
    if (controls.count() >= 3) {
      try {
        step = geom::kabsch_fit(anchor, moved).transform;
      } catch (const std::runtime_error&) {
        step = RigidTransform{};
      }
    }
    next.frames.push_back(step.compose(last));
  }
  return next;
}

}  // namespace hoisynth::worldmodel
