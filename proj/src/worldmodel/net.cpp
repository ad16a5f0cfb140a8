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
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::worldmodel {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using geom::RigidTransform;
using geom::Vec3;

namespace {

// Explicit uniform/normal sampling keeps weight init and shuffling
// byte-stable across standard-library implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal01(std::mt19937_64& rng) {
  const double u1 = std::max(uniform01(rng), 0x1.0p-53);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
  MatrixXd m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = scale * normal01(rng);
  }
  return m;
}

VectorXd relu(const VectorXd& v) { return v.cwiseMax(0.0); }

// ---------------------------------------------------------------------
// Input/target encodings. Everything is expressed relative to the last
// history pose so that a global shift of the scene cancels out.

VectorXd encode_history(const DynamicsNet& net, const ObjectStateSeq& prev) {
  if (static_cast<int>(prev.frames.size()) != net.history) {
    throw std::invalid_argument("dynamics net: history length mismatch");
  }
  const RigidTransform inv_last = prev.frames.back().inverse();
  VectorXd x(net.x_dim());
  for (int i = 0; i < net.history; ++i) {
    const RigidTransform rel = inv_last.compose(prev.frames[i]);
    x.segment<3>(9 * i) = rel.translation;
    const auto r6 = geom::rotation_to_6d(rel.rotation);
    for (int k = 0; k < 6; ++k) x(9 * i + 3 + k) = r6[k];
  }
  return x;
}

std::vector<VectorXd> encode_controls(const DynamicsNet& net,
                                      const ControlSet& controls,
                                      const RigidTransform& last) {
  const int n = controls.count();
  std::vector<VectorXd> ys;
  if (n == 0) return ys;
  const int frames = net.history + net.future;
  if (controls.frame_count() != frames) {
    throw std::invalid_argument(
        "dynamics net: control trajectories must span history + future");
  }
  const RigidTransform inv_last = last.inverse();
  for (int j = 0; j < n; ++j) {
    if (static_cast<int>(controls.surface_dist[j].size()) != frames ||
        static_cast<int>(controls.rel_velocity[j].size()) != frames) {
      throw std::invalid_argument("dynamics net: ragged control features");
    }
    VectorXd y(net.y_dim());
    int at = 0;
    for (int i = 0; i < frames; ++i, at += 3) {
      y.segment<3>(at) = inv_last.apply(controls.trajectories[j][i]);
    }
    y.segment<3>(at) = controls.tpose[j];
    at += 3;
    for (int i = 0; i < frames; ++i) y(at++) = controls.surface_dist[j][i];
    for (int i = 0; i < frames; ++i, at += 3) {
      y.segment<3>(at) = controls.rel_velocity[j][i];
    }
    ys.push_back(std::move(y));
  }
  return ys;
}

VectorXd encode_targets(const DynamicsNet& net, const ObjectStateSeq& future,
                        const RigidTransform& last) {
  if (static_cast<int>(future.frames.size()) != net.future) {
    throw std::invalid_argument("dynamics net: future length mismatch");
  }
  const RigidTransform inv_last = last.inverse();
  VectorXd t(net.out_dim());
  for (int f = 0; f < net.future; ++f) {
    const RigidTransform rel = inv_last.compose(future.frames[f]);
    t.segment<3>(9 * f) = rel.translation;
    const auto r6 = geom::rotation_to_6d(rel.rotation);
    for (int k = 0; k < 6; ++k) t(9 * f + 3 + k) = r6[k];
  }
  return t;
}

ObjectStateSeq decode_output(const DynamicsNet& net, const VectorXd& out,
                             const RigidTransform& last, double frame_rate) {
  ObjectStateSeq seq;
  seq.frame_rate = frame_rate;
  for (int f = 0; f < net.future; ++f) {
    RigidTransform rel;
    rel.translation = out.segment<3>(9 * f);
    std::array<double, 6> r6;
    for (int k = 0; k < 6; ++k) r6[k] = out(9 * f + 3 + k);
    rel.rotation = geom::rotation_from_6d(r6);
    seq.frames.push_back(last.compose(rel));
  }
  return seq;
}

// ---------------------------------------------------------------------
// Forward pass with cached intermediates for backprop.

struct BlockTrace {
  VectorXd x_in, gx, q, x_next;
  std::vector<VectorXd> y_in, fy, k, v;
  VectorXd attn;  // softmax weights, one per vertex
};

struct Trace {
  VectorXd x_raw;
  std::vector<VectorXd> y_raw;  // empty when the null token is used
  VectorXd x0;
  std::vector<VectorXd> y0;
  std::vector<BlockTrace> blocks;
  VectorXd out;
};

Trace forward(const DynamicsNet& net, const VectorXd& x_raw,
              const std::vector<VectorXd>& y_raw) {
  Trace tr;
  tr.x_raw = x_raw;
  tr.y_raw = y_raw;
  tr.x0 = net.w_embed_x * x_raw + net.b_embed_x;
  if (y_raw.empty()) {
    tr.y0 = {net.null_token};
  } else {
    for (const VectorXd& y : y_raw) {
      tr.y0.push_back(net.w_embed_y * y + net.b_embed_y);
    }
  }

  VectorXd x = tr.x0;
  std::vector<VectorXd> ys = tr.y0;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(net.latent));
  for (const DynamicsNet::Block& blk : net.blocks) {
    BlockTrace bt;
    bt.x_in = x;
    bt.y_in = ys;
    bt.gx = relu(blk.wg * x + blk.bg);
    bt.q = blk.wq * bt.gx;
    const int n = static_cast<int>(ys.size());
    bt.fy.resize(n);
    bt.k.resize(n);
    bt.v.resize(n);
    VectorXd logits(n);
    for (int j = 0; j < n; ++j) {
      bt.fy[j] = relu(blk.wf * ys[j] + blk.bf);
      bt.k[j] = blk.wk * bt.fy[j];
      bt.v[j] = blk.wv * bt.fy[j];
      logits(j) = bt.q.dot(bt.k[j]) * inv_sqrt_d;
    }
    const double peak = logits.maxCoeff();
    bt.attn = (logits.array() - peak).exp();
    bt.attn /= bt.attn.sum();
    VectorXd ctx = VectorXd::Zero(net.latent);
    for (int j = 0; j < n; ++j) ctx += bt.attn(j) * bt.v[j];
    bt.x_next = bt.gx + ctx;
    std::vector<VectorXd> ys_next(n);
    const VectorXd broadcast = blk.wu * bt.x_next;
    for (int j = 0; j < n; ++j) ys_next[j] = bt.fy[j] + broadcast;
    x = bt.x_next;
    ys = std::move(ys_next);
    tr.blocks.push_back(std::move(bt));
  }
  tr.out = net.w_head * x + net.b_head;
  return tr;
}

struct Gradients {
  MatrixXd w_embed_x, w_embed_y;
  VectorXd b_embed_x, b_embed_y, null_token;
  struct Block {
    MatrixXd wg, wf, wq, wk, wv, wu;
    VectorXd bg, bf;
  };
  std::vector<Block> blocks;
  MatrixXd w_head;
  VectorXd b_head;

  explicit Gradients(const DynamicsNet& net) {
    w_embed_x = MatrixXd::Zero(net.w_embed_x.rows(), net.w_embed_x.cols());
    w_embed_y = MatrixXd::Zero(net.w_embed_y.rows(), net.w_embed_y.cols());
    b_embed_x = VectorXd::Zero(net.latent);
    b_embed_y = VectorXd::Zero(net.latent);
    null_token = VectorXd::Zero(net.latent);
    blocks.resize(net.blocks.size());
    for (auto& b : blocks) {
      b.wg = MatrixXd::Zero(net.latent, net.latent);
      b.wf = MatrixXd::Zero(net.latent, net.latent);
      b.wq = MatrixXd::Zero(net.latent, net.latent);
      b.wk = MatrixXd::Zero(net.latent, net.latent);
      b.wv = MatrixXd::Zero(net.latent, net.latent);
      b.wu = MatrixXd::Zero(net.latent, net.latent);
      b.bg = VectorXd::Zero(net.latent);
      b.bf = VectorXd::Zero(net.latent);
    }
    w_head = MatrixXd::Zero(net.w_head.rows(), net.w_head.cols());
    b_head = VectorXd::Zero(net.out_dim());
  }
};

// Accumulates d(loss)/d(params) for one sample given d(loss)/d(out).
void backward(const DynamicsNet& net, const Trace& tr, const VectorXd& dout,
              Gradients& g) {
  g.w_head += dout * tr.blocks.back().x_next.transpose();
  g.b_head += dout;
  VectorXd dx = net.w_head.transpose() * dout;
  std::vector<VectorXd> dys(tr.y0.size(),
                            VectorXd::Zero(net.latent));

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(net.latent));
  for (int b = net.block_count - 1; b >= 0; --b) {
    const DynamicsNet::Block& blk = net.blocks[b];
    const BlockTrace& bt = tr.blocks[b];
    Gradients::Block& gb = g.blocks[b];
    const int n = static_cast<int>(bt.y_in.size());

    // y_next_j = fy_j + wu * x_next
    VectorXd dy_sum = VectorXd::Zero(net.latent);
    std::vector<VectorXd> dfy(n);
    for (int j = 0; j < n; ++j) {
      dfy[j] = dys[j];
      dy_sum += dys[j];
    }
    gb.wu += dy_sum * bt.x_next.transpose();
    VectorXd dx_next = dx + blk.wu.transpose() * dy_sum;

    // x_next = gx + sum_j attn_j v_j
    VectorXd dgx = dx_next;
    const VectorXd& dctx = dx_next;
    VectorXd dattn(n);
    for (int j = 0; j < n; ++j) dattn(j) = bt.v[j].dot(dctx);
    const double mix = bt.attn.dot(dattn);
    VectorXd dq = VectorXd::Zero(net.latent);
    for (int j = 0; j < n; ++j) {
      const double dlogit = bt.attn(j) * (dattn(j) - mix);
      dq += dlogit * bt.k[j] * inv_sqrt_d;
      const VectorXd dk = dlogit * bt.q * inv_sqrt_d;
      const VectorXd dv = bt.attn(j) * dctx;
      gb.wk += dk * bt.fy[j].transpose();
      gb.wv += dv * bt.fy[j].transpose();
      dfy[j] += blk.wk.transpose() * dk + blk.wv.transpose() * dv;
    }
    gb.wq += dq * bt.gx.transpose();
    dgx += blk.wq.transpose() * dq;

    // gx = relu(wg x_in + bg); fy_j = relu(wf y_in_j + bf)
    const VectorXd dgx_pre =
        (bt.gx.array() > 0.0).select(dgx, VectorXd::Zero(net.latent));
    gb.wg += dgx_pre * bt.x_in.transpose();
    gb.bg += dgx_pre;
    dx = blk.wg.transpose() * dgx_pre;
    for (int j = 0; j < n; ++j) {
      const VectorXd dfy_pre =
          (bt.fy[j].array() > 0.0).select(dfy[j], VectorXd::Zero(net.latent));
      gb.wf += dfy_pre * bt.y_in[j].transpose();
      gb.bf += dfy_pre;
      dys[j] = blk.wf.transpose() * dfy_pre;
    }
  }

  g.w_embed_x += dx * tr.x_raw.transpose();
  g.b_embed_x += dx;
  if (tr.y_raw.empty()) {
    g.null_token += dys[0];
  } else {
    for (std::size_t j = 0; j < tr.y_raw.size(); ++j) {
      g.w_embed_y += dys[j] * tr.y_raw[j].transpose();
      g.b_embed_y += dys[j];
    }
  }
}

void sgd_step(DynamicsNet& net, const Gradients& g, double lr) {
  net.w_embed_x -= lr * g.w_embed_x;
  net.b_embed_x -= lr * g.b_embed_x;
  net.w_embed_y -= lr * g.w_embed_y;
  net.b_embed_y -= lr * g.b_embed_y;
  net.null_token -= lr * g.null_token;
  for (int b = 0; b < net.block_count; ++b) {
    net.blocks[b].wg -= lr * g.blocks[b].wg;
    net.blocks[b].bg -= lr * g.blocks[b].bg;
    net.blocks[b].wf -= lr * g.blocks[b].wf;
    net.blocks[b].bf -= lr * g.blocks[b].bf;
    net.blocks[b].wq -= lr * g.blocks[b].wq;
    net.blocks[b].wk -= lr * g.blocks[b].wk;
    net.blocks[b].wv -= lr * g.blocks[b].wv;
    net.blocks[b].wu -= lr * g.blocks[b].wu;
  }
  net.w_head -= lr * g.w_head;
  net.b_head -= lr * g.b_head;
}

}  // namespace

DynamicsNet make_dynamics_net(int history, int future, int latent,
                              int block_count, std::uint64_t seed) {
  if (history < 1 || future < 1 || latent < 1 || block_count < 1) {
    throw std::invalid_argument("make_dynamics_net: bad shape");
  }
  DynamicsNet net;
  net.history = history;
  net.future = future;
  net.latent = latent;
  net.block_count = block_count;
  std::mt19937_64 rng(seed);
  net.w_embed_x = random_matrix(latent, net.x_dim(), rng);
  net.b_embed_x = VectorXd::Zero(latent);
  net.w_embed_y = random_matrix(latent, net.y_dim(), rng);
  net.b_embed_y = VectorXd::Zero(latent);
  net.null_token = random_matrix(latent, 1, rng);
  net.blocks.resize(block_count);
  for (auto& b : net.blocks) {
    b.wg = random_matrix(latent, latent, rng);
    b.bg = VectorXd::Zero(latent);
    b.wf = random_matrix(latent, latent, rng);
    b.bf = VectorXd::Zero(latent);
    b.wq = random_matrix(latent, latent, rng);
    b.wk = random_matrix(latent, latent, rng);
    b.wv = random_matrix(latent, latent, rng);
    b.wu = random_matrix(latent, latent, rng);
  }
  net.w_head = random_matrix(net.out_dim(), latent, rng);
  net.b_head = VectorXd::Zero(net.out_dim());
  return net;
}

ObjectStateSeq learned_step(const DynamicsNet& net, const ObjectStateSeq& prev,
                            const ControlSet& controls) {
  if (!net.trained) {
    throw std::runtime_error("learned_step: dynamics net is untrained");
  }
  const VectorXd x_raw = encode_history(net, prev);
  const std::vector<VectorXd> y_raw =
      encode_controls(net, controls, prev.frames.back());
  const Trace tr = forward(net, x_raw, y_raw);
  return decode_output(net, tr.out, prev.frames.back(), prev.frame_rate);
}

TrainResult train_dynamics(const std::vector<TrainingSegment>& dataset,
                           const DynamicsConfig& config,
                           const TrainOptions& options) {
  config.validate();
  if (dataset.empty()) {
    throw std::runtime_error("train_dynamics: empty dataset");
  }
  const int h = static_cast<int>(dataset[0].history.frames.size());
  const int f = static_cast<int>(dataset[0].future.frames.size());
  const bool rollout_shape = (h == config.history && f == config.future);
  const bool initial_shape = (h == config.history0 && f == config.future0);
  if (!rollout_shape && !initial_shape) {
    throw std::runtime_error(
        "train_dynamics: dataset horizons match neither the rollout nor the "
        "initial-step model");
  }
  for (const TrainingSegment& seg : dataset) {
    if (static_cast<int>(seg.history.frames.size()) != h ||
        static_cast<int>(seg.future.frames.size()) != f) {
      throw std::runtime_error("train_dynamics: inconsistent segment shapes");
    }
  }

  TrainResult result;
  result.net = make_dynamics_net(h, f, 64, 2, options.seed);
  DynamicsNet& net = result.net;

  // Pre-encode the whole corpus once.
  std::vector<VectorXd> xs, targets;
  std::vector<std::vector<VectorXd>> ys;
  xs.reserve(dataset.size());
  for (const TrainingSegment& seg : dataset) {
    const RigidTransform last = seg.history.frames.back();
    xs.push_back(encode_history(net, seg.history));
    ys.push_back(encode_controls(net, seg.controls, last));
    targets.push_back(encode_targets(net, seg.future, last));
  }

  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  const int out_dim = net.out_dim();
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    // Fisher-Yates with the explicit generator, for stable shuffles.
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += options.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + options.batch_size);
      Gradients grads(net);
      double batch_loss = 0.0;
      for (std::size_t s = start; s < stop; ++s) {
        const int idx = order[s];
        const Trace tr = forward(net, xs[idx], ys[idx]);
        const VectorXd err = tr.out - targets[idx];
        batch_loss += err.squaredNorm() / out_dim;
        const VectorXd dout = (2.0 / out_dim) * err;
        backward(net, tr, dout, grads);
      }
      const double inv_count = 1.0 / static_cast<double>(stop - start);
      batch_loss *= inv_count;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train_dynamics: NaN loss at epoch " +
                                 std::to_string(epoch));
      }
      // Scale accumulated gradients to the batch mean before stepping.
      Gradients scaled = std::move(grads);
      sgd_step(net, scaled, options.learning_rate * inv_count);
      epoch_loss += batch_loss * static_cast<double>(stop - start);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (epoch == 0) result.first_epoch_loss = epoch_loss;
    result.final_loss = epoch_loss;
  }
  net.trained = true;
  return result;
}

// ---------------------------------------------------------------------
// Serialization: "HOIDYN01" magic, int32 shape header, then float32
// parameters in a fixed order.

namespace {

void write_matrix(std::ofstream& out, const MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const float v = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(&v), sizeof(float));
    }
  }
}

void write_vector(std::ofstream& out, const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const float f = static_cast<float>(v(i));
    out.write(reinterpret_cast<const char*>(&f), sizeof(float));
  }
}

void read_matrix(std::ifstream& in, MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      float v = 0.0f;
      in.read(reinterpret_cast<char*>(&v), sizeof(float));
      m(r, c) = v;
    }
  }
}

void read_vector(std::ifstream& in, VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    float f = 0.0f;
    in.read(reinterpret_cast<char*>(&f), sizeof(float));
    v(i) = f;
  }
}

}  // namespace

void save_dynamics_net(const DynamicsNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write net file: " + path);
  out.write("HOIDYN01", 8);
  const std::int32_t header[5] = {net.history, net.future, net.latent,
                                  net.block_count, net.trained ? 1 : 0};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  write_matrix(out, net.w_embed_x);
  write_vector(out, net.b_embed_x);
  write_matrix(out, net.w_embed_y);
  write_vector(out, net.b_embed_y);
  write_vector(out, net.null_token);
  for (const auto& b : net.blocks) {
    write_matrix(out, b.wg);
    write_vector(out, b.bg);
    write_matrix(out, b.wf);
    write_vector(out, b.bf);
    write_matrix(out, b.wq);
    write_matrix(out, b.wk);
    write_matrix(out, b.wv);
    write_matrix(out, b.wu);
  }
  write_matrix(out, net.w_head);
  write_vector(out, net.b_head);
  if (!out) throw std::runtime_error("short write to net file: " + path);
}

DynamicsNet load_dynamics_net(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open net file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "HOIDYN01", 8) != 0) {
    throw std::runtime_error("bad net file magic: " + path);
  }
  std::int32_t header[5];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  DynamicsNet net = make_dynamics_net(header[0], header[1], header[2],
                                      header[3], /*seed=*/0);
  net.trained = header[4] != 0;
  read_matrix(in, net.w_embed_x);
  read_vector(in, net.b_embed_x);
  read_matrix(in, net.w_embed_y);
  read_vector(in, net.b_embed_y);
  read_vector(in, net.null_token);
  for (auto& b : net.blocks) {
    read_matrix(in, b.wg);
    read_vector(in, b.bg);
    read_matrix(in, b.wf);
    read_vector(in, b.bf);
    read_matrix(in, b.wq);
    read_matrix(in, b.wk);
    read_matrix(in, b.wv);
    read_matrix(in, b.wu);
  }
  read_matrix(in, net.w_head);
  read_vector(in, net.b_head);
  if (!in) throw std::runtime_error("truncated net file: " + path);
  return net;
}

}  // namespace hoisynth::worldmodel
