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

#ifndef HOISYNTH_SYNTH_BOXMAN_H_
#define HOISYNTH_SYNTH_BOXMAN_H_

#include "hoisynth/body/body.h"

namespace hoisynth::synth {

// Deterministic 24-part humanoid test rig (y-up, standing at the origin,
// ~1.7 m tall). Every part is a closed box rigidly bound to its joint, so
// the skinned surface stays watertight in any pose as long as parts do
// not interpenetrate; the hand parts carry 12 vertices each. Joint names
// and tree mirror the usual 24-joint body-model segmentation.
body::BodyRig make_boxman_rig();

}  // namespace hoisynth::synth

#endif  // HOISYNTH_SYNTH_BOXMAN_H_
