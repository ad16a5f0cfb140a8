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

#ifndef HOISYNTH_REFINE_REFINE_H_
#define HOISYNTH_REFINE_REFINE_H_

#include <string>
#include <vector>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/sdf.h"
#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::refine {

// A paired human/object sequence of equal length: the unit the optimizer
// works on.
struct SequencePair {
  body::PoseSequence human;
  worldmodel::ObjectStateSeq object;

  int frame_count() const { return static_cast<int>(human.frames.size()); }
};

struct RefineConfig {
  double lambda_fit = 1.0;
  double lambda_vel = 1.0;
  double lambda_cont = 5.0;
  double lambda_pene = 10.0;
  double epsilon = 0.02;        // contact-set radius, meters
  int iterations = 300;
  double step = 0.01;
  double gate_threshold = 0.05;

  // Smoothing of the descent objective. The L1 terms use a Huber kernel
  // and the contact min-distance a soft-min over the nearest object
  // vertices; both collapse to the exact energies as the constants go to
  // zero, and the exact values are always reported alongside.
  double huber_delta = 1e-4;
  double softmin_temperature = 1e-3;  // meters
  int softmin_neighbors = 4;
  double norm_smoothing = 1e-6;  // meters, keeps distances differentiable at 0

  // The penetration term measures object vertices against a grid SDF of
  // the posed body, rebuilt at this cadence/resolution (a per-step
  // rebuild is needlessly slow; staleness is bounded by the step size).
  int sdf_rebuild_every = 25;
  double sdf_cell = 0.02;
  double sdf_padding = 0.06;

  void validate() const;  // iterations >= 0, step > 0, epsilon > 0
};

// One row of the optimization trace. The unsuffixed fields are the
// smoothed objective actually descended (total is their weighted sum);
// the exact_* fields are the same four terms without any smoothing.
struct EnergyReport {
  double total = 0.0;
  double fit = 0.0;
  double vel = 0.0;
  double cont = 0.0;
  double pene = 0.0;
  double exact_fit = 0.0;
  double exact_vel = 0.0;
  double exact_cont = 0.0;
  double exact_pene = 0.0;
};

// Quantities held fixed across energy/gradient evaluations: the contact
// sets frozen from the reference and the per-frame body SDF snapshots the
// penetration term is measured against.
struct EnergyContext {
  std::vector<std::vector<int>> contact_sets;  // human vertex ids, per frame
  std::vector<geom::SdfGrid> body_sdfs;        // one per frame
};

// Per-frame sets T_i of human vertices within epsilon of the closest
// object vertex; both vertex lists are world-space, one entry per frame.
std::vector<std::vector<int>> contact_set(
    const std::vector<std::vector<geom::Vec3>>& human_vertices,
    const std::vector<std::vector<geom::Vec3>>& object_vertices,
    double epsilon);

// Builds the frozen context: contact sets from the reference, body SDFs
// from the iterate's poses.
EnergyContext make_energy_context(const body::BodyRig& rig,
                                  const geom::TriMesh& object_mesh,
                                  const SequencePair& iterate,
                                  const SequencePair& reference,
                                  const RefineConfig& config);

// Flattened pose parameters: for each frame the human root translation
// (3) and per-joint axis-angle rotations (3J), then for each frame the
// object translation (3) and axis-angle rotation (3).
Eigen::VectorXd pack_parameters(const SequencePair& pair);
SequencePair unpack_parameters(const Eigen::VectorXd& params,
                               const SequencePair& shape);

// Full energy of an iterate against its reference. The context overload
// is the exact function the optimizer descends; the convenience overload
// builds a fresh context (contact sets from the reference, SDFs from the
// iterate) first.
EnergyReport energy(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& iterate, const SequencePair& reference,
                    const RefineConfig& config, const EnergyContext& context);
EnergyReport energy(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& iterate, const SequencePair& reference,
                    const RefineConfig& config);

// Analytic gradient of the smoothed total with respect to the packed
// parameters, holding the context fixed; matches central finite
// differences of the context-form energy.
Eigen::VectorXd gradient(const body::BodyRig& rig,
                         const geom::TriMesh& object_mesh,
                         const SequencePair& iterate,
                         const SequencePair& reference,
                         const RefineConfig& config,
                         const EnergyContext& context);

struct RefineResult {
  SequencePair refined;
  std::vector<EnergyReport> trace;  // initial energy, then accepted steps
  bool gated = false;               // true: initial total under the gate
};

// Gradient descent with step-halving on the smoothed objective. Returns
// the reference untouched (gated) when its energy is already under the
// threshold. The descent is deterministic; the seed is reserved for
// interface stability. Throws on NaN energy, quoting the trace so far.
RefineResult refine(const body::BodyRig& rig, const geom::TriMesh& object_mesh,
                    const SequencePair& reference, const RefineConfig& config,
                    std::uint64_t seed = 0);

// Exact per-frame fitting residual |h*_i - h_i|_1 + |o*_i - o_i|_1.
std::vector<double> per_frame_fit(const SequencePair& iterate,
                                  const SequencePair& reference);

// CSV rows "iteration,total,fit,vel,cont,pene" (smoothed values).
void save_trace_csv(const std::vector<EnergyReport>& trace,
                    const std::string& path);

}  // namespace hoisynth::refine

#endif  // HOISYNTH_REFINE_REFINE_H_
