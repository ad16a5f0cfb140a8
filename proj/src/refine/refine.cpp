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

#include "hoisynth/refine/refine.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hoisynth::refine {
namespace {

using geom::Mat3;
using geom::RigidTransform;
using geom::Vec3;

// Packed layout: L human frames of (3 + 3J), then L object frames of 6.
struct Layout {
  int frames = 0;
  int joints = 0;

  int human_stride() const { return 3 + 3 * joints; }
  int human_base(int frame) const { return frame * human_stride(); }
  int object_base(int frame) const {
    return frames * human_stride() + 6 * frame;
  }
  int total() const { return frames * (human_stride() + 6); }
};

Layout layout_of(const body::BodyRig& rig, const SequencePair& pair) {
  Layout layout;
  layout.frames = pair.frame_count();
  layout.joints = rig.joint_count();
  return layout;
}

// Huber kernel: a smooth |r| with quadratic core of half-width delta.
double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? r * r / (2.0 * delta) : a - delta / 2.0;
}

double huber_grad(double r, double delta) {
  return std::clamp(r / delta, -1.0, 1.0);
}

// Per-frame forward-kinematics caches for backpropagating a gradient on a
// skinned vertex into the frame's pose parameters.
struct FrameKinematics {
  std::vector<RigidTransform> world;      // joint world transforms
  std::vector<RigidTransform> world_inv;  // their inverses
  std::vector<RigidTransform> skin;       // template -> world (minus root_t)
  std::vector<std::array<Mat3, 3>> jac;   // Rodrigues partials per joint
  bool built = false;
};

void build_kinematics(const body::BodyRig& rig, const body::BodyPose& pose,
                      FrameKinematics& out) {
  out.world = body::joint_world_transforms(rig, pose);
  out.skin = body::skin_transforms(rig, pose);
  out.world_inv.resize(out.world.size());
  out.jac.resize(out.world.size());
  for (std::size_t k = 0; k < out.world.size(); ++k) {
    out.world_inv[k] = out.world[k].inverse();
    for (int axis = 0; axis < 3; ++axis) {
      out.jac[k][axis] =
          geom::axis_angle_jacobian(pose.joint_rotations[k], axis);
    }
  }
  out.built = true;
}

// Chain rule through linear-blend skinning: a world-space gradient dv on
// vertex `vid` lands on the root translation and on every ancestor
// joint's axis-angle parameters.
void accumulate_human_gradient(const body::BodyRig& rig,
                               const FrameKinematics& kin, const Layout& layout,
                               int frame, int vid, const Vec3& dv,
                               Eigen::VectorXd& grad) {
  const int base = layout.human_base(frame);
  grad.segment<3>(base) += dv;
  const Vec3& rest = rig.template_mesh.vertices[vid];
  for (const auto& [joint, weight] : rig.skin_weights[vid]) {
    const Vec3 z = kin.skin[joint].apply(rest);
    for (int k = joint; k >= 0; k = rig.parents[k]) {
      const Vec3 u = kin.world_inv[k].apply(z);
      const Mat3 parent_rot =
          k == 0 ? Mat3(Mat3::Identity()) : kin.world[rig.parents[k]].rotation;
      for (int axis = 0; axis < 3; ++axis) {
        grad(base + 3 + 3 * k + axis) +=
            weight * dv.dot(parent_rot * (kin.jac[k][axis] * u));
      }
    }
  }
}

EnergyReport evaluate_packed(const body::BodyRig& rig,
                             const geom::TriMesh& object_mesh,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& x_ref,
                             const SequencePair& shape,
                             const RefineConfig& config,
                             const EnergyContext& context,
                             Eigen::VectorXd* grad) {
  const Layout layout = layout_of(rig, shape);
  const int frames = layout.frames;
  if (x.size() != layout.total() || x_ref.size() != layout.total()) {
    throw std::runtime_error("energy: parameter vector size mismatch");
  }
  if (static_cast<int>(context.contact_sets.size()) != frames ||
      static_cast<int>(context.body_sdfs.size()) != frames) {
    throw std::runtime_error(
        "energy: context frame count does not match the sequence");
  }
  if (grad != nullptr) grad->setZero(layout.total());

  EnergyReport report;
  const SequencePair iterate = unpack_parameters(x, shape);

  // Fitting: smoothed/exact L1 to the reference in parameter space.
  for (int p = 0; p < layout.total(); ++p) {
    const double r = x(p) - x_ref(p);
    report.fit += huber(r, config.huber_delta);
    report.exact_fit += std::abs(r);
    if (grad != nullptr) {
      (*grad)(p) += config.lambda_fit * huber_grad(r, config.huber_delta);
    }
  }

  // Velocity: L1 of consecutive-frame parameter differences.
  auto velocity_block = [&](int base_a, int base_b, int width) {
    for (int q = 0; q < width; ++q) {
      const double r = x(base_b + q) - x(base_a + q);
      report.vel += huber(r, config.huber_delta);
      report.exact_vel += std::abs(r);
      if (grad != nullptr) {
        const double d =
            config.lambda_vel * huber_grad(r, config.huber_delta);
        (*grad)(base_b + q) += d;
        (*grad)(base_a + q) -= d;
      }
    }
  };
  for (int i = 0; i + 1 < frames; ++i) {
    velocity_block(layout.human_base(i), layout.human_base(i + 1),
                   layout.human_stride());
    velocity_block(layout.object_base(i), layout.object_base(i + 1), 6);
  }

  // World-space object vertices plus the per-frame Rodrigues partials that
  // route vertex gradients into the object pose parameters.
  const int object_verts = static_cast<int>(object_mesh.vertices.size());
  std::vector<std::vector<Vec3>> world_obj(frames);
  std::vector<std::array<Mat3, 3>> obj_jac(frames);
  for (int i = 0; i < frames; ++i) {
    const RigidTransform& pose = iterate.object.frames[i];
    world_obj[i].reserve(object_verts);
    for (const Vec3& v : object_mesh.vertices) world_obj[i].push_back(pose.apply(v));
    if (grad != nullptr) {
      const Vec3 aa = x.segment<3>(layout.object_base(i) + 3);
      for (int axis = 0; axis < 3; ++axis) {
        obj_jac[i][axis] = geom::axis_angle_jacobian(aa, axis);
      }
    }
  }
  auto accumulate_object_gradient = [&](int frame, int vert, const Vec3& dv) {
    const int base = layout.object_base(frame);
    grad->segment<3>(base) += dv;
    const Vec3& local = object_mesh.vertices[vert];
    for (int axis = 0; axis < 3; ++axis) {
      (*grad)(base + 3 + axis) += dv.dot(obj_jac[frame][axis] * local);
    }
  };

  // Contact: soft-min distance from each frozen contact vertex to the
  // nearest object vertices.
  std::vector<FrameKinematics> kinematics(frames);
  std::vector<double> dist;
  std::vector<int> order;
  for (int i = 0; i < frames; ++i) {
    if (context.contact_sets[i].empty()) continue;
    const std::vector<Vec3> skinned = body::skin(rig, iterate.human.frames[i]);
    if (grad != nullptr && !kinematics[i].built) {
      build_kinematics(rig, iterate.human.frames[i], kinematics[i]);
    }
    for (int dh : context.contact_sets[i]) {
      const Vec3& vh = skinned[dh];
      dist.resize(object_verts);
      double exact_min = std::numeric_limits<double>::infinity();
      for (int k = 0; k < object_verts; ++k) {
        const double r2 = (vh - world_obj[i][k]).squaredNorm();
        dist[k] = std::sqrt(r2 + config.norm_smoothing *
                                     config.norm_smoothing);
        exact_min = std::min(exact_min, std::sqrt(r2));
      }
      const int neighbors = std::min(config.softmin_neighbors, object_verts);
      order.resize(object_verts);
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + neighbors, order.end(),
                        [&](int a, int b) { return dist[a] < dist[b]; });
      const double peak = dist[order[0]];
      double z = 0.0, smin = 0.0;
      for (int n = 0; n < neighbors; ++n) {
        z += std::exp(-(dist[order[n]] - peak) / config.softmin_temperature);
      }
      std::vector<double> weight(neighbors);
      for (int n = 0; n < neighbors; ++n) {
        weight[n] =
            std::exp(-(dist[order[n]] - peak) / config.softmin_temperature) /
            z;
        smin += weight[n] * dist[order[n]];
      }
      report.cont += smin;
      report.exact_cont += exact_min;
      if (grad != nullptr) {
        Vec3 dvh = Vec3::Zero();
        for (int n = 0; n < neighbors; ++n) {
          const int k = order[n];
          const double dsmin =
              weight[n] *
              (1.0 + (smin - dist[k]) / config.softmin_temperature);
          const Vec3 dir = (vh - world_obj[i][k]) / dist[k];
          dvh += config.lambda_cont * dsmin * dir;
          accumulate_object_gradient(i, k,
                                     -config.lambda_cont * dsmin * dir);
        }
        accumulate_human_gradient(rig, kinematics[i], layout, i, dh, dvh,
                                  *grad);
      }
    }
  }

  // Penetration: hinge on the frozen body SDF at the object vertices. The
  // snapshot does not vary with the human parameters, so the term's human
  // gradient is identically zero.
  for (int i = 0; i < frames; ++i) {
    for (int k = 0; k < object_verts; ++k) {
      const double s = geom::query_sdf(context.body_sdfs[i], world_obj[i][k]);
      if (s < 0.0) {
        report.pene -= s;
        if (grad != nullptr) {
          const Vec3 dv = -config.lambda_pene *
                          geom::query_sdf_gradient(context.body_sdfs[i],
                                                   world_obj[i][k]);
          accumulate_object_gradient(i, k, dv);
        }
      }
    }
  }
  report.exact_pene = report.pene;

  report.total = config.lambda_fit * report.fit +
                 config.lambda_vel * report.vel +
                 config.lambda_cont * report.cont +
                 config.lambda_pene * report.pene;
  return report;
}

void check_pair_lengths(const SequencePair& iterate,
                        const SequencePair& reference) {
  if (iterate.human.frames.size() != iterate.object.frames.size() ||
      reference.human.frames.size() != reference.object.frames.size() ||
      iterate.human.frames.size() != reference.human.frames.size()) {
    throw std::runtime_error(
        "energy: iterate and reference sequence lengths disagree");
  }
  if (iterate.human.frames.empty()) {
    throw std::runtime_error("energy: empty sequence");
  }
}

std::string format_trace(const std::vector<EnergyReport>& trace) {
  std::ostringstream out;
  const std::size_t first = trace.size() > 10 ? trace.size() - 10 : 0;
  for (std::size_t i = first; i < trace.size(); ++i) {
    if (i != first) out << ", ";
    out << trace[i].total;
  }
  return out.str();
}

}  // namespace

void RefineConfig::validate() const {
  if (iterations < 0) {
    throw std::runtime_error("refine config: iterations must be >= 0");
  }
  if (!(step > 0.0)) {
    throw std::runtime_error("refine config: step must be positive");
  }
  if (!(epsilon > 0.0)) {
    throw std::runtime_error("refine config: epsilon must be positive");
  }
  if (lambda_fit < 0.0 || lambda_vel < 0.0 || lambda_cont < 0.0 ||
      lambda_pene < 0.0) {
    throw std::runtime_error("refine config: weights must be nonnegative");
  }
  if (!(huber_delta > 0.0) || !(softmin_temperature > 0.0) ||
      softmin_neighbors < 1 || norm_smoothing < 0.0) {
    throw std::runtime_error("refine config: invalid smoothing constants");
  }
  if (sdf_rebuild_every < 1 || !(sdf_cell > 0.0) || !(sdf_padding > 0.0)) {
    throw std::runtime_error("refine config: invalid SDF snapshot settings");
  }
}

std::vector<std::vector<int>> contact_set(
    const std::vector<std::vector<Vec3>>& human_vertices,
    const std::vector<std::vector<Vec3>>& object_vertices,
    double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("contact_set: epsilon must be positive");
  }
  if (human_vertices.size() != object_vertices.size()) {
    throw std::invalid_argument(
        "contact_set: human and object frame counts differ");
  }
  std::vector<std::vector<int>> sets(human_vertices.size());
  for (std::size_t i = 0; i < human_vertices.size(); ++i) {
    for (std::size_t h = 0; h < human_vertices[i].size(); ++h) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& o : object_vertices[i]) {
        best = std::min(best, (human_vertices[i][h] - o).norm());
      }
      if (best <= epsilon) sets[i].push_back(static_cast<int>(h));
    }
  }
  return sets;
}

EnergyContext make_energy_context(const body::BodyRig& rig,
                                  const geom::TriMesh& object_mesh,
                                  const SequencePair& iterate,
                                  const SequencePair& reference,
                                  const RefineConfig& config) {
  check_pair_lengths(iterate, reference);
  const int frames = reference.frame_count();
  std::vector<std::vector<Vec3>> ref_human(frames), ref_object(frames);
  for (int i = 0; i < frames; ++i) {
    ref_human[i] = body::skin(rig, reference.human.frames[i]);
    ref_object[i].reserve(object_mesh.vertices.size());
    for (const Vec3& v : object_mesh.vertices) {
      ref_object[i].push_back(reference.object.frames[i].apply(v));
    }
  }
  EnergyContext context;
  context.contact_sets = contact_set(ref_human, ref_object, config.epsilon);
  context.body_sdfs.reserve(frames);
  for (int i = 0; i < frames; ++i) {
    context.body_sdfs.push_back(body::body_sdf(
        rig, iterate.human.frames[i], config.sdf_cell, config.sdf_padding));
  }
  return context;
}

Eigen::VectorXd pack_parameters(const SequencePair& pair) {
  Layout layout;
  layout.frames = pair.frame_count();
  layout.joints = pair.human.frames.empty()
                      ? 0
                      : static_cast<int>(pair.human.frames[0].joint_rotations.size());
  Eigen::VectorXd x(layout.total());
  for (int i = 0; i < layout.frames; ++i) {
    const body::BodyPose& pose = pair.human.frames[i];
    if (static_cast<int>(pose.joint_rotations.size()) != layout.joints) {
      throw std::runtime_error(
          "pack_parameters: joint counts vary across frames");
    }
    int base = layout.human_base(i);
    x.segment<3>(base) = pose.root_translation;
    for (int j = 0; j < layout.joints; ++j) {
      x.segment<3>(base + 3 + 3 * j) = pose.joint_rotations[j];
    }
    base = layout.object_base(i);
    x.segment<3>(base) = pair.object.frames[i].translation;
    x.segment<3>(base + 3) =
        geom::matrix_to_axis_angle(pair.object.frames[i].rotation);
  }
  return x;
}

SequencePair unpack_parameters(const Eigen::VectorXd& params,
                               const SequencePair& shape) {
  Layout layout;
  layout.frames = shape.frame_count();
  layout.joints = shape.human.frames.empty()
                      ? 0
                      : static_cast<int>(shape.human.frames[0].joint_rotations.size());
  if (params.size() != layout.total()) {
    throw std::runtime_error("unpack_parameters: vector size mismatch");
  }
  SequencePair pair;
  pair.human.frame_rate = shape.human.frame_rate;
  pair.object.frame_rate = shape.object.frame_rate;
  pair.human.frames.resize(layout.frames);
  pair.object.frames.resize(layout.frames);
  for (int i = 0; i < layout.frames; ++i) {
    body::BodyPose& pose = pair.human.frames[i];
    int base = layout.human_base(i);
    pose.root_translation = params.segment<3>(base);
    pose.joint_rotations.resize(layout.joints);
    for (int j = 0; j < layout.joints; ++j) {
      pose.joint_rotations[j] = params.segment<3>(base + 3 + 3 * j);
    }
    base = layout.object_base(i);
    pair.object.frames[i].translation = params.segment<3>(base);
    pair.object.frames[i].rotation =
        geom::axis_angle_to_matrix(params.segment<3>(base + 3));
  }
  return pair;
}

EnergyReport energy(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& iterate, const SequencePair& reference,
                    const RefineConfig& config, const EnergyContext& context) {
  check_pair_lengths(iterate, reference);
  return evaluate_packed(rig, object_mesh, pack_parameters(iterate),
                         pack_parameters(reference), iterate, config, context,
                         nullptr);
}

EnergyReport energy(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& iterate, const SequencePair& reference,
                    const RefineConfig& config) {
  const EnergyContext context =
      make_energy_context(rig, object_mesh, iterate, reference, config);
  return energy(rig, object_mesh, iterate, reference, config, context);
}

Eigen::VectorXd gradient(const body::BodyRig& rig,
                         const geom::TriMesh& object_mesh,
                         const SequencePair& iterate,
                         const SequencePair& reference,
                         const RefineConfig& config,
                         const EnergyContext& context) {
  check_pair_lengths(iterate, reference);
  Eigen::VectorXd grad;
  evaluate_packed(rig, object_mesh, pack_parameters(iterate),
                  pack_parameters(reference), iterate, config, context, &grad);
  return grad;
}

RefineResult refine(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& reference, const RefineConfig& config,
                    std::uint64_t /*seed: reserved, the descent is deterministic*/) {
  config.validate();
  check_pair_lengths(reference, reference);

  const Layout layout = layout_of(rig, reference);
  EnergyContext context =
      make_energy_context(rig, object_mesh, reference, reference, config);
  const Eigen::VectorXd x_ref = pack_parameters(reference);
  Eigen::VectorXd x = x_ref;
  Eigen::VectorXd sdf_human = x.head(layout.frames * layout.human_stride());

  RefineResult result;
  EnergyReport current = evaluate_packed(rig, object_mesh, x, x_ref, reference,
                                         config, context, nullptr);
  result.trace.push_back(current);
  if (std::isnan(current.total)) {
    throw std::runtime_error("refine: energy is NaN at the reference; trace: " +
                             format_trace(result.trace));
  }
  if (current.total <= config.gate_threshold) {
    result.refined = reference;
    result.gated = true;
    return result;
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    if (iter % config.sdf_rebuild_every == 0) {
      const Eigen::VectorXd human_now =
          x.head(layout.frames * layout.human_stride());
      if (human_now != sdf_human) {
        const SequencePair snapshot = unpack_parameters(x, reference);
        for (int i = 0; i < layout.frames; ++i) {
          context.body_sdfs[i] =
              body::body_sdf(rig, snapshot.human.frames[i], config.sdf_cell,
                             config.sdf_padding);
        }
        sdf_human = human_now;
        current = evaluate_packed(rig, object_mesh, x, x_ref, reference,
                                  config, context, nullptr);
      }
    }

    Eigen::VectorXd grad;
    evaluate_packed(rig, object_mesh, x, x_ref, reference, config, context,
                    &grad);

    double step = config.step;
    bool accepted = false;
    for (int halving = 0; halving < 20; ++halving) {
      const Eigen::VectorXd candidate = x - step * grad;
      const EnergyReport trial = evaluate_packed(
          rig, object_mesh, candidate, x_ref, reference, config, context,
          nullptr);
      if (std::isnan(trial.total)) {
        throw std::runtime_error("refine: energy became NaN at iteration " +
                                 std::to_string(iter) +
                                 "; trace: " + format_trace(result.trace));
      }
      if (trial.total < current.total) {
        x = candidate;
        current = trial;
        result.trace.push_back(trial);
        accepted = true;
        break;
      }
      step /= 2.0;
    }
    if (!accepted) break;  // converged: no descent direction at any step size
  }

  result.refined = unpack_parameters(x, reference);
  return result;
}

std::vector<double> per_frame_fit(const SequencePair& iterate,
                                  const SequencePair& reference) {
  check_pair_lengths(iterate, reference);
  const Eigen::VectorXd a = pack_parameters(iterate);
  const Eigen::VectorXd b = pack_parameters(reference);
  Layout layout;
  layout.frames = iterate.frame_count();
  layout.joints =
      static_cast<int>(iterate.human.frames[0].joint_rotations.size());
  std::vector<double> fit(layout.frames, 0.0);
  for (int i = 0; i < layout.frames; ++i) {
    fit[i] += (a.segment(layout.human_base(i), layout.human_stride()) -
               b.segment(layout.human_base(i), layout.human_stride()))
                  .lpNorm<1>();
    fit[i] += (a.segment(layout.object_base(i), 6) -
               b.segment(layout.object_base(i), 6))
                  .lpNorm<1>();
  }
  return fit;
}

void save_trace_csv(const std::vector<EnergyReport>& trace,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_trace_csv: cannot open '" + path + "'");
  }
  out << "iteration,total,fit,vel,cont,pene\n";
  char row[256];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(row, sizeof(row), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                  trace[i].total, trace[i].fit, trace[i].vel, trace[i].cont,
                  trace[i].pene);
    out << row;
  }
  if (!out) {
    throw std::runtime_error("save_trace_csv: write failed for '" + path +
                             "'");
  }
}

}  // namespace hoisynth::refine
