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

#include "hoisynth/retrieval/retrieval.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hoisynth/geom/registration.h"
#include "hoisynth/geom/sdf.h"

namespace hoisynth::retrieval {
namespace {

using geom::Mat3;
using geom::RigidTransform;
using geom::Vec3;
using nlohmann::json;

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

const geom::TriMesh& template_for(const InteractionDB& db,
                                  const std::string& category_lc) {
  const auto it = db.object_templates.find(category_lc);
  if (it == db.object_templates.end()) {
    throw std::runtime_error("unknown object '" + category_lc + "'");
  }
  return it->second;
}

const std::vector<int>& part_for(const InteractionDB& db,
                                 const std::string& part_lc) {
  const auto it = db.part_vertices.find(part_lc);
  if (it == db.part_vertices.end()) {
    std::string valid;
    for (const auto& name : db.part_names) {
      if (!valid.empty()) valid += ", ";
      valid += name;
    }
    throw std::runtime_error("unknown part name '" + part_lc +
                             "'; valid parts: " + valid);
  }
  return it->second;
}

// Smoothed and exact energies (plus the pose gradient) of one candidate
// object pose against a fixed body. The rotation is differentiated as a
// left-composed axis-angle increment at identity.
struct PoseEnergy {
  double smoothed = 0.0;
  double exact_fit = 0.0;
  double exact_cont = 0.0;
  double exact_pene = 0.0;
  Vec3 grad_rot = Vec3::Zero();
  Vec3 grad_trans = Vec3::Zero();
};

PoseEnergy evaluate_pose(const ContactMap& map, const geom::TriMesh& body,
                         const std::vector<int>& part_ids,
                         const geom::TriMesh& object_template,
                         const geom::SdfGrid* body_sdf,
                         const RetrievalWeights& weights,
                         const RigidTransform& pose, bool want_gradient) {
  PoseEnergy result;
  const double mu2 = weights.norm_smoothing * weights.norm_smoothing;
  std::vector<Vec3> world(object_template.vertices.size());
  for (std::size_t i = 0; i < world.size(); ++i) {
    world[i] = pose.apply(object_template.vertices[i]);
  }
  auto add_vertex_gradient = [&](int vert, const Vec3& dv) {
    result.grad_trans += dv;
    const Vec3 u = pose.rotation * object_template.vertices[vert];
    for (int axis = 0; axis < 3; ++axis) {
      result.grad_rot(axis) += dv.dot(Vec3::Unit(axis).cross(u));
    }
  };

  double fit_s = 0.0;
  for (const auto& [dh, dobj] : map.pairs) {
    const Vec3 diff = world[dobj] - body.vertices[dh];
    const double d = std::sqrt(diff.squaredNorm() + mu2);
    fit_s += d;
    result.exact_fit += diff.norm();
    if (want_gradient && weights.lambda_fit > 0.0) {
      add_vertex_gradient(dobj, weights.lambda_fit * diff / d);
    }
  }

  double cont_s = 0.0;
  std::vector<double> dist(world.size());
  std::vector<int> order(world.size());
  for (int dh : part_ids) {
    const Vec3& vh = body.vertices[dh];
    double exact_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < world.size(); ++k) {
      const double r2 = (vh - world[k]).squaredNorm();
      dist[k] = std::sqrt(r2 + mu2);
      exact_min = std::min(exact_min, std::sqrt(r2));
    }
    result.exact_cont += exact_min;
    const int neighbors =
        std::min<int>(weights.softmin_neighbors, static_cast<int>(world.size()));
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + neighbors, order.end(),
                      [&](int a, int b) { return dist[a] < dist[b]; });
    const double peak = dist[order[0]];
    double z = 0.0;
    for (int n = 0; n < neighbors; ++n) {
      z += std::exp(-(dist[order[n]] - peak) / weights.softmin_temperature);
    }
    double smin = 0.0;
    std::vector<double> weight(neighbors);
    for (int n = 0; n < neighbors; ++n) {
      weight[n] =
          std::exp(-(dist[order[n]] - peak) / weights.softmin_temperature) / z;
      smin += weight[n] * dist[order[n]];
    }
    cont_s += smin;
    if (want_gradient && weights.lambda_cont > 0.0) {
      for (int n = 0; n < neighbors; ++n) {
        const int k = order[n];
        const double dsmin =
            weight[n] *
            (1.0 + (smin - dist[k]) / weights.softmin_temperature);
        const Vec3 dir = (vh - world[k]) / dist[k];
        add_vertex_gradient(k, -weights.lambda_cont * dsmin * dir);
      }
    }
  }

  double pene = 0.0;
  if (body_sdf != nullptr) {
    for (std::size_t k = 0; k < world.size(); ++k) {
      const double s = geom::query_sdf(*body_sdf, world[k]);
      if (s < 0.0) {
        pene -= s;
        if (want_gradient && weights.lambda_pene > 0.0) {
          add_vertex_gradient(static_cast<int>(k),
                              -weights.lambda_pene *
                                  geom::query_sdf_gradient(*body_sdf, world[k]));
        }
      }
    }
  }
  result.exact_pene = pene;

  result.smoothed = weights.lambda_fit * fit_s + weights.lambda_cont * cont_s +
                    weights.lambda_pene * pene;
  return result;
}

RigidTransform warm_start(const ContactMap& map, const geom::TriMesh& body,
                          const geom::TriMesh& object_template) {
  std::vector<Vec3> src, dst;
  src.reserve(map.pairs.size());
  dst.reserve(map.pairs.size());
  for (const auto& [dh, dobj] : map.pairs) {
    src.push_back(object_template.vertices[dobj]);
    dst.push_back(body.vertices[dh]);
  }
  if (src.size() >= 3) {
    try {
      return geom::kabsch_fit(src, dst).transform;
    } catch (const std::runtime_error&) {
      // degenerate correspondences: fall through to centroid alignment
    }
  }
  Vec3 src_c = Vec3::Zero(), dst_c = Vec3::Zero();
  for (const Vec3& p : src) src_c += p;
  for (const Vec3& p : dst) dst_c += p;
  src_c /= static_cast<double>(src.size());
  dst_c /= static_cast<double>(dst.size());
  RigidTransform pose;
  pose.translation = dst_c - src_c;
  return pose;
}

std::string sanitize_filename(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  }
  return out.empty() ? "object" : out;
}

void validate_map(const ContactMap& map, const InteractionDB& db) {
  if (map.pairs.empty()) {
    throw std::runtime_error("contact map '" + map.source_id +
                             "' has no pairs");
  }
  const geom::TriMesh& tmpl = template_for(db, map.category);
  part_for(db, map.part);
  std::set<std::pair<int, int>> seen;
  for (const auto& [dh, dobj] : map.pairs) {
    if (dh < 0 || dobj < 0 ||
        dobj >= static_cast<int>(tmpl.vertices.size())) {
      throw std::runtime_error("contact map '" + map.source_id +
                               "' has out-of-range vertex indices");
    }
    if (!seen.insert({dh, dobj}).second) {
      throw std::runtime_error("contact map '" + map.source_id +
                               "' has duplicate pairs");
    }
  }
}

}  // namespace

InteractionDB make_interaction_db(const body::BodyRig& rig) {
  body::validate_rig(rig);
  InteractionDB db;
  for (const std::string& name : rig.part_names) {
    const std::string lc = to_lower(name);
    if (db.part_vertices.count(lc) != 0) {
      throw std::runtime_error(
          "interaction db: part names collide case-insensitively: '" + name +
          "'");
    }
    db.part_names.push_back(lc);
    db.part_vertices[lc] = {};
  }
  for (std::size_t v = 0; v < rig.part_labels.size(); ++v) {
    db.part_vertices[db.part_names[rig.part_labels[v]]].push_back(
        static_cast<int>(v));
  }
  return db;
}

void add_object_template(InteractionDB& db, const std::string& category,
                         const geom::TriMesh& mesh) {
  if (mesh.vertices.empty()) {
    throw std::runtime_error("add_object_template: empty mesh for '" +
                             category + "'");
  }
  db.object_templates[to_lower(category)] = mesh;
}

ContactMap ingest_frame(InteractionDB& db,
                        const std::vector<Vec3>& body_vertices,
                        const geom::TriMesh& object_mesh,
                        const RigidTransform& object_pose,
                        const std::string& part, const std::string& category,
                        double contact_threshold,
                        const std::string& source_id) {
  if (!(contact_threshold > 0.0)) {
    throw std::invalid_argument(
        "ingest_frame: contact threshold must be positive");
  }
  ContactMap map;
  map.part = to_lower(part);
  map.category = to_lower(category);
  map.source_id = source_id;
  const geom::TriMesh& tmpl = template_for(db, map.category);
  if (object_mesh.vertices.size() != tmpl.vertices.size()) {
    throw std::runtime_error(
        "ingest_frame: object mesh does not match the '" + map.category +
        "' template");
  }
  const std::vector<int>& part_ids = part_for(db, map.part);

  std::vector<Vec3> world(object_mesh.vertices.size());
  for (std::size_t i = 0; i < world.size(); ++i) {
    world[i] = object_pose.apply(object_mesh.vertices[i]);
  }
  for (int dh : part_ids) {
    if (dh >= static_cast<int>(body_vertices.size())) {
      throw std::runtime_error(
          "ingest_frame: body vertex list shorter than the part indices");
    }
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < world.size(); ++k) {
      const double d = (body_vertices[dh] - world[k]).norm();
      if (d < best_dist) {
        best_dist = d;
        best = static_cast<int>(k);
      }
    }
    if (best >= 0 && best_dist <= contact_threshold) {
      map.pairs.push_back({dh, best});
    }
  }
  if (!map.pairs.empty()) db.entries.push_back(map);
  return map;
}

std::vector<ContactMap> query(const InteractionDB& db, const std::string& part,
                              const std::string& category) {
  const std::string part_lc = to_lower(part);
  const std::string category_lc = to_lower(category);
  std::vector<ContactMap> out;
  for (const ContactMap& map : db.entries) {
    if (map.part == part_lc && map.category == category_lc) {
      out.push_back(map);
    }
  }
  return out;
}

RetrievalResult fit_initial_pose(const ContactMap& map,
                                 const geom::TriMesh& posed_body,
                                 const std::vector<int>& part_vertex_ids,
                                 const geom::TriMesh& object_template,
                                 const RetrievalWeights& weights,
                                 std::optional<RigidTransform> init) {
  if (map.pairs.empty()) {
    throw std::invalid_argument("fit_initial_pose: contact map has no pairs");
  }
  if (weights.lambda_fit < 0.0 || weights.lambda_cont < 0.0 ||
      weights.lambda_pene < 0.0) {
    throw std::invalid_argument(
        "fit_initial_pose: weights must be nonnegative");
  }
  if (object_template.vertices.empty()) {
    throw std::invalid_argument("fit_initial_pose: empty object template");
  }
  for (const auto& [dh, dobj] : map.pairs) {
    if (dh < 0 || dh >= static_cast<int>(posed_body.vertices.size()) ||
        dobj < 0 || dobj >= static_cast<int>(object_template.vertices.size())) {
      throw std::invalid_argument(
          "fit_initial_pose: contact map indices out of range");
    }
  }
  for (int dh : part_vertex_ids) {
    if (dh < 0 || dh >= static_cast<int>(posed_body.vertices.size())) {
      throw std::invalid_argument(
          "fit_initial_pose: part vertex index out of range");
    }
  }

  std::optional<geom::SdfGrid> body_sdf;
  if (weights.lambda_pene > 0.0) {
    body_sdf.emplace(
        geom::build_sdf(posed_body, weights.sdf_cell, weights.sdf_padding));
  }
  const geom::SdfGrid* sdf_ptr = body_sdf ? &*body_sdf : nullptr;

  RigidTransform pose =
      init.has_value() ? *init : warm_start(map, posed_body, object_template);

  RetrievalResult result;
  PoseEnergy current = evaluate_pose(map, posed_body, part_vertex_ids,
                                     object_template, sdf_ptr, weights, pose,
                                     /*want_gradient=*/false);
  result.trace.push_back(current.smoothed);
  auto throw_nan = [&](int iteration) {
    std::ostringstream msg;
    msg << "fit_initial_pose: energy became NaN at iteration " << iteration
        << "; trace:";
    const std::size_t first =
        result.trace.size() > 10 ? result.trace.size() - 10 : 0;
    for (std::size_t i = first; i < result.trace.size(); ++i) {
      msg << ' ' << result.trace[i];
    }
    throw std::runtime_error(msg.str());
  };
  if (std::isnan(current.smoothed)) throw_nan(0);

  for (int iter = 1; iter <= weights.iterations; ++iter) {
    const PoseEnergy at = evaluate_pose(map, posed_body, part_vertex_ids,
                                        object_template, sdf_ptr, weights,
                                        pose, /*want_gradient=*/true);
    double step = weights.step;
    bool accepted = false;
    for (int halving = 0; halving < 20; ++halving) {
      RigidTransform candidate;
      candidate.rotation = geom::orthonormalize(
          geom::axis_angle_to_matrix(-step * at.grad_rot) * pose.rotation);
      candidate.translation = pose.translation - step * at.grad_trans;
      const PoseEnergy trial = evaluate_pose(
          map, posed_body, part_vertex_ids, object_template, sdf_ptr,
          weights, candidate, /*want_gradient=*/false);
      if (std::isnan(trial.smoothed)) throw_nan(iter);
      if (trial.smoothed < current.smoothed) {
        pose = candidate;
        current = trial;
        result.trace.push_back(trial.smoothed);
        accepted = true;
        break;
      }
      step /= 2.0;
    }
    if (!accepted) break;
  }

  result.object_state = pose;
  result.e_fit = current.exact_fit;
  result.e_cont = current.exact_cont;
  result.e_pene = current.exact_pene;
  result.score =
      current.exact_pene > 0.0 ? 0.0 : 1.0 / std::max(current.exact_cont, 1e-12);
  return result;
}

RetrievalResult select_pose(const std::vector<RetrievalResult>& candidates,
                            std::uint64_t seed, bool argmax) {
  if (candidates.empty()) {
    throw std::runtime_error("retrieval produced no pose");
  }
  double total = 0.0;
  for (const RetrievalResult& c : candidates) total += c.score;

  if (total <= 0.0) {
    // No penetration-free candidate: least penetration wins, lowest index
    // breaking ties.
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (candidates[i].e_pene < candidates[best].e_pene) best = i;
    }
    return candidates[best];
  }
  if (argmax) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (candidates[i].score > candidates[best].score) best = i;
    }
    return candidates[best];
  }
  std::mt19937_64 rng(seed);
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (const RetrievalResult& c : candidates) {
    acc += c.score;
    if (u < acc) return c;
  }
  // Numerical tail: the last candidate with positive mass.
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    if (it->score > 0.0) return *it;
  }
  return candidates.back();
}

void save_interaction_db(const InteractionDB& db, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  json manifest;
  manifest["part_order"] = db.part_names;
  manifest["parts"] = json::object();
  for (const auto& [part, ids] : db.part_vertices) {
    manifest["parts"][part] = ids;
  }
  manifest["templates"] = json::object();
  for (const auto& [category, mesh] : db.object_templates) {
    const std::string file = sanitize_filename(category) + ".obj";
    manifest["templates"][category] = file;
    geom::save_obj(mesh, (fs::path(dir) / file).string());
  }
  std::ofstream mf(fs::path(dir) / "manifest.json");
  if (!mf) {
    throw std::runtime_error("save_interaction_db: cannot write manifest in '" +
                             dir + "'");
  }
  mf << manifest.dump(2) << "\n";

  std::ofstream maps(fs::path(dir) / "maps.jsonl");
  for (const ContactMap& map : db.entries) {
    json line;
    line["part"] = map.part;
    line["category"] = map.category;
    line["source_id"] = map.source_id;
    line["pairs"] = json::array();
    for (const auto& [dh, dobj] : map.pairs) {
      line["pairs"].push_back({dh, dobj});
    }
    maps << line.dump() << "\n";
  }
  if (!maps) {
    throw std::runtime_error("save_interaction_db: write failed in '" + dir +
                             "'");
  }
}

InteractionDB load_interaction_db(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) {
    throw std::runtime_error("load_interaction_db: cannot open manifest in '" +
                             dir + "'");
  }
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("load_interaction_db: bad manifest: ") +
                             e.what());
  }

  InteractionDB db;
  db.part_names = manifest.at("part_order").get<std::vector<std::string>>();
  for (const auto& [part, ids] : manifest.at("parts").items()) {
    db.part_vertices[part] = ids.get<std::vector<int>>();
  }
  for (const std::string& part : db.part_names) {
    if (db.part_vertices.count(part) == 0) {
      throw std::runtime_error(
          "load_interaction_db: part_order lists unknown part '" + part + "'");
    }
  }
  for (const auto& [category, file] : manifest.at("templates").items()) {
    db.object_templates[category] =
        geom::load_obj((fs::path(dir) / file.get<std::string>()).string());
  }

  std::ifstream maps(fs::path(dir) / "maps.jsonl");
  if (!maps) {
    throw std::runtime_error("load_interaction_db: cannot open maps in '" +
                             dir + "'");
  }
  std::string line;
  int line_no = 0;
  while (std::getline(maps, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("load_interaction_db: maps.jsonl line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    ContactMap map;
    map.part = record.at("part").get<std::string>();
    map.category = record.at("category").get<std::string>();
    map.source_id = record.value("source_id", "");
    for (const auto& pair : record.at("pairs")) {
      map.pairs.push_back({pair.at(0).get<int>(), pair.at(1).get<int>()});
    }
    validate_map(map, db);
    db.entries.push_back(map);
  }
  return db;
}

}  // namespace hoisynth::retrieval
