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
#include <limits>
#include <optional>
#include <stdexcept>

#include "hoisynth/geom/transform.h"
#include "hoisynth/pipeline/pipeline.h"

namespace hoisynth::pipeline {
namespace {

using geom::RigidTransform;
using geom::Vec3;

// A point within a tenth of a micrometer of the body surface is touching,
// not penetrating; this absorbs the FP noise of flush-contact poses.
constexpr double kOnSurfaceEps = 1e-7;

// Ray/triangle crossings for the parity test. Returns nullopt when the
// ray passes too close to a triangle edge or plane for the count to be
// trusted, so the caller can retry along another direction.
std::optional<int> count_crossings(const std::vector<Vec3>& vertices,
                                   const std::vector<std::array<int, 3>>& faces,
                                   const Vec3& origin, const Vec3& dir) {
  constexpr double kBaryMargin = 1e-10;
  int crossings = 0;
  for (const auto& face : faces) {
    const Vec3& a = vertices[static_cast<size_t>(face[0])];
    const Vec3& b = vertices[static_cast<size_t>(face[1])];
    const Vec3& c = vertices[static_cast<size_t>(face[2])];
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    const double scale = e1.norm() * e2.norm();
    if (std::abs(det) <= kBaryMargin * scale) continue;  // parallel ray
    const double inv_det = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv_det;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv_det;
    const double t = e2.dot(q) * inv_det;
    if (t <= kOnSurfaceEps) continue;  // behind or at the origin
    if (u < -kBaryMargin || v < -kBaryMargin || u + v > 1.0 + kBaryMargin) {
      continue;  // clean miss
    }
    if (u < kBaryMargin || v < kBaryMargin || u + v > 1.0 - kBaryMargin) {
      return std::nullopt;  // grazing an edge: ambiguous crossing
    }
    ++crossings;
  }
  return crossings;
}

double unsigned_distance(const std::vector<Vec3>& vertices,
                         const std::vector<std::array<int, 3>>& faces,
                         const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& face : faces) {
    const Vec3 q = geom::closest_point_on_triangle(
        p, vertices[static_cast<size_t>(face[0])],
        vertices[static_cast<size_t>(face[1])],
        vertices[static_cast<size_t>(face[2])]);
    best = std::min(best, (p - q).norm());
  }
  return best;
}

bool point_inside(const std::vector<Vec3>& vertices,
                  const std::vector<std::array<int, 3>>& faces,
                  const Vec3& p) {
  if (unsigned_distance(vertices, faces, p) <= kOnSurfaceEps) return false;
  // Oblique directions so axis-aligned geometry is never hit edge-on.
  static const Vec3 kDirections[] = {
      Vec3(0.287514, 0.612042, 0.736706).normalized(),
      Vec3(-0.554700, 0.832050, 0.000000).normalized(),
      Vec3(0.801784, -0.267261, 0.534522).normalized(),
      Vec3(-0.218218, -0.436436, 0.872872).normalized(),
      Vec3(0.577350, 0.577350, -0.577350).normalized(),
  };
  for (const Vec3& dir : kDirections) {
    const std::optional<int> crossings =
        count_crossings(vertices, faces, p, dir);
    if (crossings.has_value()) return (*crossings % 2) == 1;
  }
  // Every probe grazed an edge; treat the point as on-boundary.
  return false;
}

void check_sequence(const InteractionSequence& seq) {
  if (seq.human.frames.size() != seq.object.frames.size()) {
    throw std::invalid_argument(
        "sequence has unequal human and object frame counts");
  }
}

}  // namespace

ContactProfile contact_profile(const body::BodyRig& rig,
                               const geom::TriMesh& object_mesh,
                               const InteractionSequence& seq,
                               double threshold) {
  if (threshold <= 0.0) {
    throw std::invalid_argument("contact_profile: threshold must be positive");
  }
  check_sequence(seq);
  const int parts = static_cast<int>(rig.part_names.size());
  const int frames = seq.frame_count();
  std::vector<int> hits(static_cast<size_t>(parts), 0);
  for (int f = 0; f < frames; ++f) {
    const std::vector<Vec3> body =
        body::skin(rig, seq.human.frames[static_cast<size_t>(f)]);
    const RigidTransform& pose = seq.object.frames[static_cast<size_t>(f)];
    std::vector<bool> part_hit(static_cast<size_t>(parts), false);
    for (size_t v = 0; v < body.size(); ++v) {
      const int part = rig.part_labels[v];
      if (part_hit[static_cast<size_t>(part)]) continue;
      const auto [nearest, distance] =
          geom::nearest_on_mesh(object_mesh, pose, body[v]);
      if (distance < threshold) part_hit[static_cast<size_t>(part)] = true;
    }
    for (int p = 0; p < parts; ++p) {
      hits[static_cast<size_t>(p)] += part_hit[static_cast<size_t>(p)] ? 1 : 0;
    }
  }
  ContactProfile profile;
  profile.fractions.resize(static_cast<size_t>(parts), 0.0);
  for (int p = 0; p < parts; ++p) {
    profile.fractions[static_cast<size_t>(p)] =
        frames > 0 ? static_cast<double>(hits[static_cast<size_t>(p)]) /
                         static_cast<double>(frames)
                   : 0.0;
  }
  return profile;
}

double metric_cmd(const ContactProfile& generated,
                  const ContactProfile& reference) {
  if (generated.fractions.size() != reference.fractions.size()) {
    throw std::invalid_argument("metric_cmd: profile lengths differ (" +
                                std::to_string(generated.fractions.size()) +
                                " vs " +
                                std::to_string(reference.fractions.size()) +
                                ")");
  }
  if (generated.fractions.empty()) {
    throw std::invalid_argument("metric_cmd: empty profiles");
  }
  double sum = 0.0;
  for (size_t p = 0; p < generated.fractions.size(); ++p) {
    sum += std::abs(generated.fractions[p] - reference.fractions[p]);
  }
  return sum / static_cast<double>(generated.fractions.size());
}

double metric_pene(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                   const InteractionSequence& seq) {
  check_sequence(seq);
  const int frames = seq.frame_count();
  if (frames == 0 || object_mesh.vertices.empty()) return 0.0;
  double total = 0.0;
  for (int f = 0; f < frames; ++f) {
    const std::vector<Vec3> body =
        body::skin(rig, seq.human.frames[static_cast<size_t>(f)]);
    const RigidTransform& pose = seq.object.frames[static_cast<size_t>(f)];
    int inside = 0;
    for (const Vec3& vertex : object_mesh.vertices) {
      if (point_inside(body, rig.template_mesh.faces, pose.apply(vertex))) {
        ++inside;
      }
    }
    total += static_cast<double>(inside) /
             static_cast<double>(object_mesh.vertices.size());
  }
  return total / static_cast<double>(frames);
}

std::pair<double, double> metric_pose_err(
    const worldmodel::ObjectStateSeq& pred,
    const worldmodel::ObjectStateSeq& gt) {
  if (pred.frames.size() != gt.frames.size()) {
    throw std::invalid_argument("metric_pose_err: sequence lengths differ (" +
                                std::to_string(pred.frames.size()) + " vs " +
                                std::to_string(gt.frames.size()) + ")");
  }
  if (pred.frames.empty()) {
    throw std::invalid_argument("metric_pose_err: empty sequences");
  }
  double trans = 0.0;
  double rot = 0.0;
  for (size_t f = 0; f < pred.frames.size(); ++f) {
    trans += (pred.frames[f].translation - gt.frames[f].translation).norm();
    rot += geom::geodesic_angle(pred.frames[f].rotation,
                                gt.frames[f].rotation);
  }
  const double n = static_cast<double>(pred.frames.size());
  return {trans / n * 1000.0, rot / n};
}

}  // namespace hoisynth::pipeline
