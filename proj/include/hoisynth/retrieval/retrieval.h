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

#ifndef HOISYNTH_RETRIEVAL_RETRIEVAL_H_
#define HOISYNTH_RETRIEVAL_RETRIEVAL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/transform.h"

namespace hoisynth::retrieval {

// A recorded set of touching vertex correspondences between one body part
// and one object category. Keys are stored lowercase; lookups are
// case-insensitive.
struct ContactMap {
  std::string part;
  std::string category;
  std::vector<std::pair<int, int>> pairs;  // (human vertex, object vertex)
  std::string source_id;

  int size() const { return static_cast<int>(pairs.size()); }
};

// Interaction database: contact maps keyed by (part, category), the body
// part vocabulary they index into, and one template mesh per category.
struct InteractionDB {
  std::vector<std::string> part_names;                     // lowercase
  std::map<std::string, std::vector<int>> part_vertices;   // part -> body ids
  std::map<std::string, geom::TriMesh> object_templates;   // category -> mesh
  std::vector<ContactMap> entries;
};

// Derives the part vocabulary and per-part vertex sets from a rig.
InteractionDB make_interaction_db(const body::BodyRig& rig);

// Registers (or replaces) the template mesh for a category.
void add_object_template(InteractionDB& db, const std::string& category,
                         const geom::TriMesh& mesh);

// Records the contact map of one posed frame: every vertex of the keyed
// part whose nearest posed object vertex lies within `contact_threshold`,
// paired with that vertex (indices into the category template). Frames
// with no touching vertex are skipped (returned map has no pairs, nothing
// is stored). Unknown part or category names raise.
ContactMap ingest_frame(InteractionDB& db,
                        const std::vector<geom::Vec3>& body_vertices,
                        const geom::TriMesh& object_mesh,
                        const geom::RigidTransform& object_pose,
                        const std::string& part, const std::string& category,
                        double contact_threshold,
                        const std::string& source_id = "");

// All stored maps under the (case-insensitive) key, in insertion order.
std::vector<ContactMap> query(const InteractionDB& db, const std::string& part,
                              const std::string& category);

struct RetrievalWeights {
  double lambda_fit = 1.0;
  double lambda_cont = 1.0;
  double lambda_pene = 10.0;
  int iterations = 300;
  double step = 0.01;
  double norm_smoothing = 1e-6;       // meters
  double softmin_temperature = 1e-3;  // meters
  int softmin_neighbors = 4;
  double sdf_cell = 0.02;
  double sdf_padding = 0.06;
};

// Outcome of one initial-pose fit. Energies are the exact (unsmoothed)
// values at the final pose; score is 1/max(e_cont, tiny) when the pose is
// penetration-free and 0 otherwise. trace holds the smoothed objective at
// the start and after every accepted descent step.
struct RetrievalResult {
  geom::RigidTransform object_state;
  double e_fit = 0.0;
  double e_cont = 0.0;
  double e_pene = 0.0;
  double score = 0.0;
  std::vector<double> trace;
};

// Fits the object pose to one contact map by gradient descent over the
// object's rigid pose: correspondence distances (fit), part-to-surface
// chamfer (cont), and an SDF penetration hinge (pene). Starts from `init`
// when given, otherwise from a Kabsch warm start over the map's
// correspondences (centroid alignment when underdetermined). The posed
// body mesh must be watertight when lambda_pene > 0 (its SDF anchors the
// penetration term); with lambda_pene == 0 the term is skipped and e_pene
// reports 0.
RetrievalResult fit_initial_pose(const ContactMap& map,
                                 const geom::TriMesh& posed_body,
                                 const std::vector<int>& part_vertex_ids,
                                 const geom::TriMesh& object_template,
                                 const RetrievalWeights& weights,
                                 std::optional<geom::RigidTransform> init = {});

// Samples one candidate with probability proportional to its score; when
// every score is zero, deterministically returns the least-penetrating
// candidate. With argmax set, picks the highest score (lowest index wins
// ties) instead of sampling. Empty input raises "retrieval produced no
// pose".
RetrievalResult select_pose(const std::vector<RetrievalResult>& candidates,
                            std::uint64_t seed, bool argmax = false);

// Directory layout: maps.jsonl (one ContactMap per line), manifest.json
// (part vertex sets and category -> OBJ file table), one OBJ per category.
void save_interaction_db(const InteractionDB& db, const std::string& dir);
InteractionDB load_interaction_db(const std::string& dir);

}  // namespace hoisynth::retrieval

#endif  // HOISYNTH_RETRIEVAL_RETRIEVAL_H_
