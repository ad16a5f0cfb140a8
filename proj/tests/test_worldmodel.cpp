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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "hoisynth/geom/sdf.h"
#include "hoisynth/synth/boxman.h"
#include "hoisynth/synth/carry.h"
#include "hoisynth/synth/primitives.h"
#include "hoisynth/worldmodel/control.h"
#include "hoisynth/worldmodel/dynamics.h"

using namespace hoisynth;
using geom::RigidTransform;
using geom::Vec3;
using worldmodel::ControlSet;
using worldmodel::ObjectStateSeq;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return Vec3(dist(rng), dist(rng), dist(rng));
}

// Brute-force restatement of the greedy farthest-point contract, kept
// deliberately independent of the library implementation.
std::vector<int> greedy_oracle(const std::vector<std::vector<Vec3>>& frames,
                               const geom::SdfGrid& sdf,
                               const std::vector<RigidTransform>& poses,
                               double d1, double d2) {
  std::vector<int> candidates;
  const int verts = static_cast<int>(frames[0].size());
  for (int j = 0; j < verts; ++j) {
    bool ok = true;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (std::abs(geom::query_sdf(sdf, poses[i].apply_inverse(frames[i][j]))) >
          d1) {
        ok = false;
        break;
      }
    }
    if (ok) candidates.push_back(j);
  }
  if (candidates.empty()) return {};
  auto min_sep = [&](int a, int b) {
    double best = 1e300;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      best = std::min(best, (frames[i][a] - frames[i][b]).norm());
    }
    return best;
  };
  std::vector<int> picked = {candidates[0]};
  while (true) {
    int arg = -1;
    double best = -1;
    for (int c : candidates) {
      if (std::find(picked.begin(), picked.end(), c) != picked.end()) continue;
      double score = 1e300;
      for (int p : picked) score = std::min(score, min_sep(c, p));
      if (score >= d2 && score > best) {
        best = score;
        arg = c;
      }
    }
    if (arg < 0) break;
    picked.push_back(arg);
  }
  return picked;
}

ObjectStateSeq static_history(int frames, const RigidTransform& pose) {
  ObjectStateSeq seq;
  seq.frames.assign(frames, pose);
  return seq;
}

}  // namespace

TEST_CASE("control sampling: far body yields the empty set") {
  const auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.1, 0.1, 0.1));
  const auto sdf = geom::build_sdf(cube, 0.02, 0.1);
  std::vector<std::vector<Vec3>> frames(4);
  for (auto& f : frames) {
    for (int j = 0; j < 20; ++j) f.push_back(Vec3(1.0 + 0.01 * j, 0, 0));
  }
  std::vector<RigidTransform> poses(4);
  CHECK(worldmodel::sample_control_vertices(frames, sdf, poses, 0.02, 0.05)
            .empty());
}

TEST_CASE("control sampling: single touching vertex is returned") {
  const auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.1, 0.1, 0.1));
  const auto sdf = geom::build_sdf(cube, 0.01, 0.08);
  std::vector<std::vector<Vec3>> frames(4);
  for (auto& f : frames) {
    f.push_back(Vec3(1.0, 0, 0));          // far
    f.push_back(Vec3(0.1, 0.0, 0.0));      // on the +x face all frames
    f.push_back(Vec3(0.6, 0.2, 0.0));      // far
  }
  std::vector<RigidTransform> poses(4);
  const auto picked =
      worldmodel::sample_control_vertices(frames, sdf, poses, 0.02, 0.05);
  REQUIRE(picked.size() == 1);
  CHECK(picked[0] == 1);
}

TEST_CASE("control sampling: planar patch equals brute-force greedy") {
  const auto slab = synth::make_box_mesh(Vec3(0, -0.05, 0), Vec3(0.5, 0.05, 0.5));
  const auto sdf = geom::build_sdf(slab, 0.01, 0.08);
  // A 0.01-spaced grid of vertices resting on the slab's top face.
  std::vector<Vec3> patch;
  for (int ix = 0; ix <= 20; ++ix) {
    for (int iz = 0; iz <= 20; ++iz) {
      patch.push_back(Vec3(-0.1 + 0.01 * ix, 0.0, -0.1 + 0.01 * iz));
    }
  }
  std::vector<std::vector<Vec3>> frames(4, patch);
  std::vector<RigidTransform> poses(4);
  const double d1 = 0.02, d2 = 0.05;
  const auto picked =
      worldmodel::sample_control_vertices(frames, sdf, poses, d1, d2);
  CHECK(picked.size() >= 3);

  for (std::size_t a = 0; a < picked.size(); ++a) {
    for (std::size_t b = a + 1; b < picked.size(); ++b) {
      for (int i = 0; i < 4; ++i) {
        CHECK((frames[i][picked[a]] - frames[i][picked[b]]).norm() >=
              d2 - 1e-12);
      }
    }
  }
  CHECK(picked == greedy_oracle(frames, sdf, poses, d1, d2));
}

TEST_CASE("control sampling: matches oracle on randomized configurations") {
  std::mt19937_64 rng(71);
  const auto object = synth::make_icosphere(Vec3::Zero(), 0.15, 2);
  const auto sdf = geom::build_sdf(object, 0.01, 0.08);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<RigidTransform> poses;
    for (int i = 0; i < 3; ++i) {
      poses.push_back(RigidTransform{
          geom::axis_angle_to_matrix(0.1 * random_vec(rng, -1, 1)),
          0.02 * random_vec(rng, -1, 1)});
    }
    std::vector<std::vector<Vec3>> frames(3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 60; ++j) {
        // Mix of near-surface and scattered vertices.
        Vec3 p = random_vec(rng, -0.3, 0.3);
        if (j % 2 == 0) p = p.normalized() * 0.15;
        frames[i].push_back(poses[i].apply(p));
      }
    }
    const auto picked =
        worldmodel::sample_control_vertices(frames, sdf, poses, 0.02, 0.05);
    CHECK(picked == greedy_oracle(frames, sdf, poses, 0.02, 0.05));
    for (int j : picked) {
      for (int i = 0; i < 3; ++i) {
        const double d = geom::query_sdf(
            sdf, poses[i].apply_inverse(frames[i][j]));
        CHECK(std::abs(d) <= 0.02 + 1e-12);
      }
    }
  }
}

TEST_CASE("control features: static and co-moving cases have zero velocity") {
  const auto rig = synth::make_boxman_rig();
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.1, 0.1, 0.1));

  const int frames = 6;
  std::vector<RigidTransform> static_poses(frames);
  std::vector<std::vector<Vec3>> still = {
      std::vector<Vec3>(frames, Vec3(0.1, 0.05, 0.0))};
  auto set = worldmodel::control_features(rig, {0}, still, object,
                                          static_poses);
  REQUIRE(set.count() == 1);
  CHECK(set.tpose[0] == rig.template_mesh.vertices[0]);
  for (int i = 0; i < frames; ++i) {
    CHECK(set.rel_velocity[0][i].norm() == 0.0);
    CHECK(set.surface_dist[0][i] >= 0.0);
  }

  // Vertex riding rigidly on a moving object: relative motion cancels.
  std::mt19937_64 rng(73);
  std::vector<RigidTransform> moving;
  RigidTransform pose{geom::axis_angle_to_matrix(Vec3(0.1, 0.2, 0.3)),
                      Vec3(0.5, 1.0, -0.2)};
  const geom::Mat3 spin = geom::axis_angle_to_matrix(Vec3(0.02, -0.01, 0.03));
  for (int i = 0; i < frames; ++i) {
    moving.push_back(pose);
    pose.rotation = spin * pose.rotation;
    pose.translation += Vec3(0.01, 0.005, -0.002);
  }
  const Vec3 local(0.1, 0.02, -0.03);
  std::vector<std::vector<Vec3>> riding(1);
  for (int i = 0; i < frames; ++i) riding[0].push_back(moving[i].apply(local));
  set = worldmodel::control_features(rig, {5}, riding, object, moving);
  for (int i = 0; i < frames; ++i) {
    CHECK(set.rel_velocity[0][i].norm() < 1e-12);
  }
}

TEST_CASE("control features: fly-by velocity matches hand finite difference") {
  const auto rig = synth::make_boxman_rig();
  // Single-vertex object so the nearest-vertex pairing cannot switch.
  geom::TriMesh point;
  point.vertices.push_back(Vec3(0, -1, 0));
  geom::finalize_mesh(point);

  const int frames = 8;
  std::vector<RigidTransform> poses(frames);
  std::vector<std::vector<Vec3>> traj(1);
  for (int i = 0; i < frames; ++i) {
    traj[0].push_back(Vec3(i / 30.0, 0, 0));  // +x at 1 m/s, 30 Hz
  }
  const auto set = worldmodel::control_features(rig, {0}, traj, point, poses);
  for (int i = 0; i < frames; ++i) {
    CHECK((set.rel_velocity[0][i] - Vec3(1.0 / 30.0, 0, 0)).norm() < 1e-12);
  }
}

TEST_CASE("oracle: empty control set holds the pose") {
  RigidTransform pose{geom::axis_angle_to_matrix(Vec3(0.3, 0, 0)),
                      Vec3(1, 2, 3)};
  const auto prev = static_history(4, pose);
  const auto next = worldmodel::oracle_step(prev, ControlSet{}, 12);
  REQUIRE(next.frames.size() == 12);
  for (const auto& f : next.frames) {
    CHECK((f.rotation - pose.rotation).norm() == 0.0);
    CHECK((f.translation - pose.translation).norm() == 0.0);
  }
}

TEST_CASE("oracle: rigidly translating controls translate the object") {
  RigidTransform pose;
  pose.translation = Vec3(0.5, 1.0, 0.0);
  const auto prev = static_history(4, pose);
  ControlSet controls;
  const Vec3 t(0.04, -0.02, 0.01);
  const std::vector<Vec3> base = {Vec3(0, 0, 0), Vec3(0.2, 0, 0),
                                  Vec3(0, 0.2, 0), Vec3(0.1, 0.1, 0.2)};
  controls.vertex_ids = {0, 1, 2, 3};
  for (const Vec3& b : base) {
    std::vector<Vec3> path;
    for (int i = 0; i < 4; ++i) path.push_back(b);           // history
    for (int i = 1; i <= 12; ++i) path.push_back(b + i * t); // future
    controls.trajectories.push_back(path);
  }
  const auto next = worldmodel::oracle_step(prev, controls);
  REQUIRE(next.frames.size() == 12);
  for (int i = 0; i < 12; ++i) {
    CHECK((next.frames[i].translation - (pose.translation + (i + 1) * t))
              .norm() < 1e-9);
    CHECK((next.frames[i].rotation - pose.rotation).norm() < 1e-9);
  }
}

TEST_CASE("oracle: exact on welded carry sequences") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus =
      synth::make_welded_carry_corpus(object, 4, 12, 50, /*seed=*/101);
  int checked = 0;
  for (const auto& seg : corpus) {
    if (seg.controls.count() == 0) continue;
    const auto predicted = worldmodel::oracle_step(seg.history, seg.controls);
    REQUIRE(predicted.frames.size() == seg.future.frames.size());
    for (std::size_t i = 0; i < predicted.frames.size(); ++i) {
      CHECK((predicted.frames[i].translation -
             seg.future.frames[i].translation)
                .norm() < 1e-6);
      CHECK(geom::geodesic_angle(predicted.frames[i].rotation,
                                 seg.future.frames[i].rotation) < 1e-6);
    }
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("oracle: fewer than 3 controls holds the pose") {
  RigidTransform pose;
  pose.translation = Vec3(0, 1, 0);
  const auto prev = static_history(4, pose);
  ControlSet controls;
  controls.vertex_ids = {0, 1};
  for (int j = 0; j < 2; ++j) {
    std::vector<Vec3> path;
    for (int i = 0; i < 16; ++i) path.push_back(Vec3(j, 0.01 * i, 0));
    controls.trajectories.push_back(path);
  }
  const auto next = worldmodel::oracle_step(prev, controls);
  for (const auto& f : next.frames) {
    CHECK((f.translation - pose.translation).norm() == 0.0);
  }
}

TEST_CASE("dynamics config validation") {
  worldmodel::DynamicsConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.m == 4);
  CHECK(config.history == 4);
  CHECK(config.future == 12);
  CHECK(config.history0 == 1);
  CHECK(config.future0 == 15);
  config.future = 2;  // forecast shorter than history
  CHECK_THROWS_AS(config.validate(), std::runtime_error);
}

TEST_CASE("learned step: untrained net refuses to predict") {
  const auto net = worldmodel::make_dynamics_net(4, 12, 64, 2, 1);
  const auto prev = static_history(4, RigidTransform{});
  CHECK_THROWS_WITH_AS(worldmodel::learned_step(net, prev, ControlSet{}),
                       doctest::Contains("untrained"), std::runtime_error);
}

TEST_CASE("learned step: output shape, valid rotations, permutation symmetry") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 64, 7);
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 3;
  options.seed = 5;
  const auto trained = worldmodel::train_dynamics(corpus, config, options);

  const auto& seg = corpus[0];
  REQUIRE(seg.controls.count() >= 3);
  const auto out = worldmodel::learned_step(trained.net, seg.history,
                                            seg.controls);
  REQUIRE(out.frames.size() == 12);
  for (const auto& f : out.frames) {
    CHECK((f.rotation * f.rotation.transpose() - geom::Mat3::Identity())
              .norm() < 1e-6);
    CHECK(f.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Reversing the vertex order must not change the prediction.
  ControlSet reversed = seg.controls;
  std::reverse(reversed.vertex_ids.begin(), reversed.vertex_ids.end());
  std::reverse(reversed.trajectories.begin(), reversed.trajectories.end());
  std::reverse(reversed.tpose.begin(), reversed.tpose.end());
  std::reverse(reversed.surface_dist.begin(), reversed.surface_dist.end());
  std::reverse(reversed.rel_velocity.begin(), reversed.rel_velocity.end());
  const auto out2 = worldmodel::learned_step(trained.net, seg.history,
                                             reversed);
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    CHECK((out.frames[i].translation - out2.frames[i].translation).norm() <
          1e-5);
    CHECK(geom::geodesic_angle(out.frames[i].rotation,
                               out2.frames[i].rotation) < 1e-5);
  }
}

TEST_CASE("training: constant-object dataset drives the loss to ~0") {
  // Identity future from identity history: the easiest possible task.
  std::vector<worldmodel::TrainingSegment> dataset;
  for (int s = 0; s < 64; ++s) {
    worldmodel::TrainingSegment seg;
    RigidTransform pose;
    pose.translation = Vec3(0.01 * s, 1.0, 0.0);
    seg.history.frames.assign(4, pose);
    seg.future.frames.assign(12, pose);
    dataset.push_back(seg);
  }
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 400;
  options.learning_rate = 0.05;
  const auto result = worldmodel::train_dynamics(dataset, config, options);
  CHECK(result.final_loss < 1e-6);
  CHECK(result.final_loss < result.first_epoch_loss);
}

TEST_CASE("training: loss decreases on the welded corpus") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 200, 11);
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 40;
  const auto result = worldmodel::train_dynamics(corpus, config, options);
  CHECK(result.final_loss < result.first_epoch_loss);
  CHECK(std::isfinite(result.final_loss));
}

TEST_CASE("training: both horizon shapes are accepted, others rejected") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 1;

  const auto initial = synth::make_welded_carry_corpus(object, 1, 15, 16, 13);
  CHECK_NOTHROW(worldmodel::train_dynamics(initial, config, options));

  const auto bad = synth::make_welded_carry_corpus(object, 2, 5, 4, 17);
  CHECK_THROWS_AS(worldmodel::train_dynamics(bad, config, options),
                  std::runtime_error);
  CHECK_THROWS_AS(worldmodel::train_dynamics({}, config, options),
                  std::runtime_error);
}

TEST_CASE("translation equivariance of sampling, oracle, and learned step") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 32, 19);
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 2;
  const auto trained = worldmodel::train_dynamics(corpus, config, options);

  const Vec3 shift(5.0, -2.0, 3.0);
  const auto& seg = corpus[0];
  REQUIRE(seg.controls.count() >= 3);

  auto shifted = seg;
  for (auto& f : shifted.history.frames) f.translation += shift;
  for (auto& f : shifted.future.frames) f.translation += shift;
  for (auto& traj : shifted.controls.trajectories) {
    for (Vec3& p : traj) p += shift;
  }

  const auto base_oracle = worldmodel::oracle_step(seg.history, seg.controls);
  const auto moved_oracle =
      worldmodel::oracle_step(shifted.history, shifted.controls);
  for (std::size_t i = 0; i < base_oracle.frames.size(); ++i) {
    CHECK((moved_oracle.frames[i].translation -
           base_oracle.frames[i].translation - shift)
              .norm() < 1e-9);
    CHECK((moved_oracle.frames[i].rotation - base_oracle.frames[i].rotation)
              .norm() < 1e-9);
  }

  const auto base_net = worldmodel::learned_step(trained.net, seg.history,
                                                 seg.controls);
  const auto moved_net = worldmodel::learned_step(trained.net, shifted.history,
                                                  shifted.controls);
  for (std::size_t i = 0; i < base_net.frames.size(); ++i) {
    CHECK((moved_net.frames[i].translation - base_net.frames[i].translation -
           shift)
              .norm() < 1e-9);
    CHECK((moved_net.frames[i].rotation - base_net.frames[i].rotation).norm() <
          1e-9);
  }
}

TEST_CASE("net serialization round trips predictions exactly") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 32, 23);
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 2;
  auto trained = worldmodel::train_dynamics(corpus, config, options);

  const std::string path = "/tmp/hoisynth_net_test.bin";
  // Round-trip through float32 storage: quantize, save, reload, compare.
  worldmodel::save_dynamics_net(trained.net, path);
  const auto loaded = worldmodel::load_dynamics_net(path);
  worldmodel::save_dynamics_net(loaded, path);
  const auto reloaded = worldmodel::load_dynamics_net(path);
  CHECK(loaded.trained);
  CHECK(loaded.history == 4);
  CHECK(loaded.future == 12);

  const auto a = worldmodel::learned_step(loaded, corpus[0].history,
                                          corpus[0].controls);
  const auto b = worldmodel::learned_step(reloaded, corpus[0].history,
                                          corpus[0].controls);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    CHECK((a.frames[i].translation - b.frames[i].translation).norm() == 0.0);
    CHECK((a.frames[i].rotation - b.frames[i].rotation).norm() == 0.0);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(worldmodel::load_dynamics_net("/tmp/hoisynth_missing.bin"),
                  std::runtime_error);
}

TEST_CASE("corpus jsonl round trip") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 10, 29);
  const std::string path = "/tmp/hoisynth_corpus_test.jsonl";
  worldmodel::save_corpus(corpus, path);
  const auto back = worldmodel::load_corpus(path);
  REQUIRE(back.size() == corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    REQUIRE(back[s].history.frames.size() == corpus[s].history.frames.size());
    REQUIRE(back[s].future.frames.size() == corpus[s].future.frames.size());
    CHECK(back[s].controls.vertex_ids == corpus[s].controls.vertex_ids);
    for (std::size_t i = 0; i < corpus[s].history.frames.size(); ++i) {
      CHECK((back[s].history.frames[i].translation -
             corpus[s].history.frames[i].translation)
                .norm() < 1e-12);
      CHECK((back[s].history.frames[i].rotation -
             corpus[s].history.frames[i].rotation)
                .norm() < 1e-9);
    }
    for (int j = 0; j < corpus[s].controls.count(); ++j) {
      for (std::size_t i = 0; i < corpus[s].controls.trajectories[j].size();
           ++i) {
        CHECK((back[s].controls.trajectories[j][i] -
               corpus[s].controls.trajectories[j][i])
                  .norm() < 1e-12);
      }
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("training determinism: same seed, same losses") {
  const auto object = synth::make_box_mesh(Vec3::Zero(), Vec3(0.15, 0.1, 0.1));
  const auto corpus = synth::make_welded_carry_corpus(object, 4, 12, 48, 31);
  worldmodel::DynamicsConfig config;
  worldmodel::TrainOptions options;
  options.epochs = 5;
  options.seed = 99;
  const auto a = worldmodel::train_dynamics(corpus, config, options);
  const auto b = worldmodel::train_dynamics(corpus, config, options);
  CHECK(a.final_loss == b.final_loss);
  options.seed = 100;
  const auto c = worldmodel::train_dynamics(corpus, config, options);
  CHECK(a.final_loss != c.final_loss);
}
