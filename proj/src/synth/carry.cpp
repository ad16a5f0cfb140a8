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

#include "hoisynth/synth/carry.h"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

namespace hoisynth::synth {

using geom::RigidTransform;
using geom::Vec3;
using worldmodel::TrainingSegment;

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

Vec3 random_unit(std::mt19937_64& rng) {
  while (true) {
    const Vec3 v(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    const double n = v.norm();
    if (n > 1e-3 && n <= 1.0) return v / n;
  }
}

}  // namespace

std::vector<TrainingSegment> make_welded_carry_corpus(
    const geom::TriMesh& object, int history, int future, int count,
    std::uint64_t seed) {
  if (object.vertices.size() < 3) {
    throw std::invalid_argument("carry corpus: object needs >= 3 vertices");
  }
  if (history < 1 || future < 1 || count < 1) {
    throw std::invalid_argument("carry corpus: bad shape");
  }
  std::mt19937_64 rng(seed);
  const int total = history + future;
  const int vertex_count = static_cast<int>(object.vertices.size());
  Vec3 centroid = Vec3::Zero();
  for (const Vec3& v : object.vertices) centroid += v;
  centroid /= static_cast<double>(vertex_count);

  std::vector<TrainingSegment> corpus;
  corpus.reserve(count);
  for (int s = 0; s < count; ++s) {
    const bool contact_free = (s % 10) == 9;

    RigidTransform pose;
    pose.rotation =
        geom::axis_angle_to_matrix(random_unit(rng) * uniform(rng, -0.5, 0.5));
    pose.translation =
        Vec3(uniform(rng, -1, 1), uniform(rng, 0.5, 1.5), uniform(rng, -1, 1));

    std::vector<RigidTransform> poses;
    poses.reserve(total);
    if (contact_free) {
      poses.assign(total, pose);
    } else {
      // Constant screw: spin about the object center, drift linearly.
      const geom::Mat3 spin = geom::axis_angle_to_matrix(
          random_unit(rng) * uniform(rng, 0.0, 0.03));
      const Vec3 drift = random_unit(rng) * uniform(rng, 0.0, 0.02);
      poses.push_back(pose);
      for (int i = 1; i < total; ++i) {
        RigidTransform next;
        next.rotation = spin * poses.back().rotation;
        next.translation = poses.back().translation + drift;
        poses.push_back(next);
      }
    }

    TrainingSegment seg;
    seg.history.frame_rate = seg.future.frame_rate = 30.0;
    for (int i = 0; i < history; ++i) seg.history.frames.push_back(poses[i]);
    for (int i = history; i < total; ++i) seg.future.frames.push_back(poses[i]);

    if (!contact_free) {
      // Distinct surface anchors, first three non-collinear.
      std::vector<int> picks;
      while (true) {
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) <
               3 + static_cast<int>(rng() % 4)) {
          chosen.insert(static_cast<int>(rng() % vertex_count));
        }
        picks.assign(chosen.begin(), chosen.end());
        if (picks.size() < 3) continue;
        const Vec3 a = object.vertices[picks[0]];
        const Vec3 b = object.vertices[picks[1]];
        const Vec3 c = object.vertices[picks[2]];
        if ((b - a).cross(c - a).norm() > 1e-4) break;
      }
      const int n = static_cast<int>(picks.size());
      seg.controls.vertex_ids = picks;  // object-anchored pseudo-ids
      seg.controls.trajectories.assign(n, {});
      seg.controls.surface_dist.assign(n, {});
      seg.controls.rel_velocity.assign(
          n, std::vector<Vec3>(total, Vec3::Zero()));
      for (int j = 0; j < n; ++j) {
        Vec3 outward = object.vertices[picks[j]] - centroid;
        outward = outward.norm() > 1e-9 ? Vec3(outward.normalized())
                                        : Vec3::UnitY();
        const Vec3 local =
            object.vertices[picks[j]] + outward * uniform(rng, 0.0, 0.008);
        seg.controls.tpose.push_back(local);
        const double dist =
            geom::nearest_on_mesh(object, RigidTransform{}, local).second;
        seg.controls.surface_dist[j].assign(total, dist);
        for (int i = 0; i < total; ++i) {
          seg.controls.trajectories[j].push_back(poses[i].apply(local));
        }
      }
    }
    corpus.push_back(std::move(seg));
  }
  return corpus;
}

}  // namespace hoisynth::synth
