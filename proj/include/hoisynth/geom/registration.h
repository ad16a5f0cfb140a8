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

#ifndef HOISYNTH_GEOM_REGISTRATION_H_
#define HOISYNTH_GEOM_REGISTRATION_H_

#include "hoisynth/geom/transform.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::geom {

struct KabschResult {
  RigidTransform transform;
  double rms = 0.0;  // root-mean-square residual after alignment
};

// Least-squares rigid registration of corresponded point sets:
// argmin over (R, t) of sum_i |R*src_i + t - dst_i|^2, reflection-safe.
// Throws "underdetermined" for fewer than 3 points or collinear input.
KabschResult kabsch_fit(const PointSet& src, const PointSet& dst);

}  // namespace hoisynth::geom

#endif  // HOISYNTH_GEOM_REGISTRATION_H_
