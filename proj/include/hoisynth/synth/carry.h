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

#ifndef HOISYNTH_SYNTH_CARRY_H_
#define HOISYNTH_SYNTH_CARRY_H_

#include <cstdint>
#include <vector>

#include "hoisynth/geom/mesh.h"
#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::synth {

// Synthetic carry corpus: per segment, the object follows a smooth random
// screw motion and N contact points ride rigidly on (or just off) its
// surface, so the welded rigid motion is the exact ground truth. About
// one segment in ten is contact-free with a static object, exercising the
// no-contact path. `history`/`future` choose the horizon pair.
std::vector<worldmodel::TrainingSegment> make_welded_carry_corpus(
    const geom::TriMesh& object, int history, int future, int count,
    std::uint64_t seed);

}  // namespace hoisynth::synth

#endif  // HOISYNTH_SYNTH_CARRY_H_
