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

#ifndef HOISYNTH_WORLDMODEL_DYNAMICS_H_
#define HOISYNTH_WORLDMODEL_DYNAMICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hoisynth/geom/transform.h"
#include "hoisynth/worldmodel/control.h"

namespace hoisynth::worldmodel {

// Object pose trajectory at a fixed frame rate.
struct ObjectStateSeq {
  std::vector<geom::RigidTransform> frames;
  double frame_rate = 30.0;
};

// Segmenting and horizon parameters. One MDP step covers m frames; the
// rollout model maps H history frames to F future frames, and a separate
// initial-step model maps H0 to F0.
struct DynamicsConfig {
  int m = 4;
  int history = 4;    // H
  int future = 12;    // F
  int history0 = 1;   // H0
  int future0 = 15;   // F0
  double delta1 = 0.02;  // meters, surface band for control sampling
  double delta2 = 0.05;  // meters, minimum control separation

  void validate() const;
};

// One supervised example: H history poses, the controls spanning H+F
// frames, and the F ground-truth future poses.
struct TrainingSegment {
  ObjectStateSeq history;
  ObjectStateSeq future;
  ControlSet controls;
};

// Predicts the future segment by applying, per future frame, the rigid
// motion that best explains the control trajectories since the last
// history frame (closed-form registration). Fewer than 3 controls, or a
// degenerate configuration, holds the pose. `future_frames` fixes the
// output length when the control set is empty (otherwise it is inferred
// from the trajectory length).
ObjectStateSeq oracle_step(const ObjectStateSeq& prev,
                           const ControlSet& controls,
                           int future_frames = -1);

// Trainable dynamics model: embeddings into a 64-d latent space, two
// stacked blocks of {state mapper, shared per-vertex mapper, single-head
// cross-attention fusion}, and a linear head regressing per-future-frame
// (translation delta, 6-number rotation). All inputs are canonicalized
// relative to the last history pose, which makes the model
// translation-equivariant by construction. A learned null token stands in
// for the vertex set when N = 0.
struct DynamicsNet {
  int history = 4;
  int future = 12;
  int latent = 64;
  int block_count = 2;
  bool trained = false;

  struct Block {
    Eigen::MatrixXd wg, wf, wq, wk, wv, wu;
    Eigen::VectorXd bg, bf;
  };
  Eigen::MatrixXd w_embed_x, w_embed_y;
  Eigen::VectorXd b_embed_x, b_embed_y;
  Eigen::VectorXd null_token;
  std::vector<Block> blocks;
  Eigen::MatrixXd w_head;
  Eigen::VectorXd b_head;

  int x_dim() const { return 9 * history; }
  int y_dim() const { return 7 * (history + future) + 3; }
  int out_dim() const { return 9 * future; }
};

// Freshly initialized (untrained) net with seeded weights.
DynamicsNet make_dynamics_net(int history, int future, int latent,
                              int block_count, std::uint64_t seed);

// Predicts F future frames. Rollout consumers keep only the first m.
// Rotations are re-orthonormalized on output. Throws if the net is
// untrained or the shapes disagree.
ObjectStateSeq learned_step(const DynamicsNet& net, const ObjectStateSeq& prev,
                            const ControlSet& controls);

struct TrainOptions {
  int epochs = 500;
  int batch_size = 32;
  double learning_rate = 0.02;
  std::uint64_t seed = 1;
};

struct TrainResult {
  DynamicsNet net;
  double first_epoch_loss = 0.0;
  double final_loss = 0.0;
};

// Plain minibatch SGD on the MSE between predicted and ground-truth
// future encodings. Deterministic given the seed; single-threaded.
// Throws (naming the epoch) if the loss turns NaN.
TrainResult train_dynamics(const std::vector<TrainingSegment>& dataset,
                           const DynamicsConfig& config,
                           const TrainOptions& options);

// Versioned binary net file: header + little-endian float32 parameters.
void save_dynamics_net(const DynamicsNet& net, const std::string& path);
DynamicsNet load_dynamics_net(const std::string& path);

// Training corpus as JSON lines, one segment per line.
void save_corpus(const std::vector<TrainingSegment>& corpus,
                 const std::string& path);
std::vector<TrainingSegment> load_corpus(const std::string& path);

}  // namespace hoisynth::worldmodel

#endif  // HOISYNTH_WORLDMODEL_DYNAMICS_H_
