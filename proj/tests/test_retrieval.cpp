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
#include <filesystem>
#include <fstream>
#include <random>

#include "hoisynth/geom/registration.h"
#include "hoisynth/geom/sdf.h"
#include "hoisynth/retrieval/retrieval.h"
#include "hoisynth/synth/primitives.h"

using namespace hoisynth;
using doctest::Contains;
using geom::Mat3;
using geom::RigidTransform;
using geom::Vec3;
using retrieval::ContactMap;
using retrieval::InteractionDB;
using retrieval::RetrievalResult;
using retrieval::RetrievalWeights;

namespace {

// One-joint rigid box body; the "Palm" part is the 9-vertex top face
// (y = +0.1), everything else is "rest".
body::BodyRig make_palm_rig() {
  body::BodyRig rig;
  rig.template_mesh = synth::make_subdivided_box_mesh(
      Vec3::Zero(), Vec3(0.1, 0.1, 0.1), {2, 2, 2});
  rig.joints = {Vec3::Zero()};
  rig.parents = {-1};
  rig.skin_weights.assign(rig.template_mesh.vertices.size(), {{0, 1.0}});
  rig.part_names = {"rest", "Palm"};
  for (const Vec3& v : rig.template_mesh.vertices) {
    rig.part_labels.push_back(v.y() > 0.1 - 1e-9 ? 1 : 0);
  }
  body::validate_rig(rig);
  return rig;
}

geom::TriMesh make_object_box() {
  return synth::make_subdivided_box_mesh(Vec3::Zero(), Vec3(0.1, 0.1, 0.1),
                                         {2, 2, 2});
}

// Object resting flush on the palm: its bottom face (local y = -0.1)
// coincides vertex-for-vertex with the body's top face.
RigidTransform flush_pose() {
  RigidTransform pose;
  pose.translation = Vec3(0, 0.2, 0);
  return pose;
}

InteractionDB make_palm_db() {
  InteractionDB db = retrieval::make_interaction_db(make_palm_rig());
  retrieval::add_object_template(db, "Box", make_object_box());
  return db;
}

// Test-local restatement of the ingestion rule: each part vertex pairs
// with its nearest posed object vertex when that distance is within the
// threshold.
std::vector<std::pair<int, int>> oracle_pairs(
    const std::vector<Vec3>& body_verts, const std::vector<int>& part_ids,
    const geom::TriMesh& object_mesh, const RigidTransform& pose,
    double threshold) {
  std::vector<std::pair<int, int>> out;
  for (int dh : part_ids) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(object_mesh.vertices.size()); ++k) {
      const double d =
          (body_verts[dh] - pose.apply(object_mesh.vertices[k])).norm();
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    if (best_dist <= threshold) out.push_back({dh, best});
  }
  return out;
}

int vertex_index_of(const geom::TriMesh& mesh, const Vec3& p) {
  for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
    if ((mesh.vertices[i] - p).norm() < 1e-12) return i;
  }
  REQUIRE(false);
  return -1;
}

bool strictly_decreasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!(trace[i] < trace[i - 1])) return false;
  }
  return true;
}

RetrievalResult candidate(double score, double e_pene, double tag) {
  RetrievalResult r;
  r.score = score;
  r.e_pene = e_pene;
  r.object_state.translation = Vec3(tag, 0, 0);
  return r;
}

}  // namespace

TEST_CASE("make_interaction_db: parts are lowercased and match the rig") {
  const body::BodyRig rig = make_palm_rig();
  const InteractionDB db = retrieval::make_interaction_db(rig);
  REQUIRE(db.part_names == std::vector<std::string>{"rest", "palm"});
  CHECK(db.part_vertices.at("palm") == body::part_vertices(rig, "Palm"));
  CHECK(db.part_vertices.at("rest") == body::part_vertices(rig, "rest"));
  CHECK(db.part_vertices.at("palm").size() == 9);
  CHECK(db.part_vertices.at("rest").size() ==
        rig.template_mesh.vertices.size() - 9);
  CHECK(db.entries.empty());
}

TEST_CASE("make_interaction_db: case-colliding part names are rejected") {
  body::BodyRig rig = make_palm_rig();
  rig.part_names = {"Palm", "palm"};
  CHECK_THROWS_WITH_AS(retrieval::make_interaction_db(rig),
                       Contains("collide"), std::runtime_error);
}

TEST_CASE("ingest_frame: far object stores nothing") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  RigidTransform far_pose;
  far_pose.translation = Vec3(5, 5, 5);
  const ContactMap map =
      retrieval::ingest_frame(db, rig.template_mesh.vertices,
                              make_object_box(), far_pose, "palm", "box", 0.03);
  CHECK(map.pairs.empty());
  CHECK(map.size() == 0);
  CHECK(db.entries.empty());
}

TEST_CASE("ingest_frame: flush grasp pairs every palm vertex exactly") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  const ContactMap map = retrieval::ingest_frame(
      db, rig.template_mesh.vertices, make_object_box(), flush_pose(), "Palm",
      "Box", 0.03, "demo:0");
  CHECK(map.part == "palm");
  CHECK(map.category == "box");
  CHECK(map.source_id == "demo:0");
  REQUIRE(map.size() == 9);
  // Every pair is an exact coincidence of a palm vertex with an object
  // bottom-face vertex.
  const geom::TriMesh object = make_object_box();
  for (const auto& [dh, dobj] : map.pairs) {
    CHECK(rig.part_labels[dh] == 1);
    CHECK((rig.template_mesh.vertices[dh] -
           flush_pose().apply(object.vertices[dobj]))
              .norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  REQUIRE(db.entries.size() == 1);
  CHECK(db.entries[0].pairs == map.pairs);
}

TEST_CASE("ingest_frame: randomized configs match the brute-force oracle") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  const geom::TriMesh object = make_object_box();
  const std::vector<int> palm = db.part_vertices.at("palm");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int nonempty = 0;
  for (int trial = 0; trial < 10; ++trial) {
    RigidTransform pose;
    pose.rotation = geom::axis_angle_to_matrix(
        0.3 * Vec3(unit(rng), unit(rng), unit(rng)));
    pose.translation =
        Vec3(0.05 * unit(rng), 0.17 + 0.08 * unit(rng), 0.05 * unit(rng));
    const ContactMap map = retrieval::ingest_frame(
        db, rig.template_mesh.vertices, object, pose, "palm", "box", 0.03);
    CHECK(map.pairs ==
          oracle_pairs(rig.template_mesh.vertices, palm, object, pose, 0.03));
    if (!map.pairs.empty()) ++nonempty;
  }
  CHECK(nonempty > 0);
  CHECK(db.entries.size() == static_cast<std::size_t>(nonempty));
}

TEST_CASE("ingest_frame: invalid inputs are rejected") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  const std::vector<Vec3>& verts = rig.template_mesh.vertices;
  const geom::TriMesh object = make_object_box();

  CHECK_THROWS_AS(retrieval::ingest_frame(db, verts, object, flush_pose(),
                                          "palm", "box", 0.0),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(retrieval::ingest_frame(db, verts, object, flush_pose(),
                                               "thumb", "box", 0.03),
                       Contains("unknown part"), std::runtime_error);
  CHECK_THROWS_WITH_AS(retrieval::ingest_frame(db, verts, object, flush_pose(),
                                               "palm", "cup", 0.03),
                       Contains("unknown object"), std::runtime_error);
  const geom::TriMesh coarse =
      synth::make_box_mesh(Vec3::Zero(), Vec3(0.1, 0.1, 0.1));
  CHECK_THROWS_WITH_AS(retrieval::ingest_frame(db, verts, coarse, flush_pose(),
                                               "palm", "box", 0.03),
                       Contains("does not match"), std::runtime_error);
  const std::vector<Vec3> short_body(verts.begin(), verts.begin() + 5);
  CHECK_THROWS_WITH_AS(retrieval::ingest_frame(db, short_body, object,
                                               flush_pose(), "palm", "box",
                                               0.03),
                       Contains("shorter"), std::runtime_error);
}

TEST_CASE("query: case-insensitive key filtering in insertion order") {
  InteractionDB db = make_palm_db();
  retrieval::add_object_template(db, "mug",
                                 synth::make_icosphere(Vec3::Zero(), 0.05, 1));
  const body::BodyRig rig = make_palm_rig();
  const std::vector<Vec3>& verts = rig.template_mesh.vertices;
  const geom::TriMesh object = make_object_box();

  RigidTransform lifted = flush_pose();
  lifted.translation.y() += 0.01;
  RigidTransform mug_pose;
  mug_pose.translation = Vec3(0, 0.15, 0);

  RigidTransform below;  // object under the body: touches the "rest" part
  below.translation = Vec3(0, -0.2, 0);

  retrieval::ingest_frame(db, verts, object, flush_pose(), "Palm", "Box", 0.03,
                          "a");
  retrieval::ingest_frame(db, verts,
                          synth::make_icosphere(Vec3::Zero(), 0.05, 1),
                          mug_pose, "palm", "MUG", 0.07, "b");
  retrieval::ingest_frame(db, verts, object, lifted, "PALM", "box", 0.03, "c");
  retrieval::ingest_frame(db, verts, object, below, "rest", "box", 0.03, "d");
  REQUIRE(db.entries.size() == 4);

  const std::vector<ContactMap> hits = retrieval::query(db, "PaLm", "bOx");
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].source_id == "a");
  CHECK(hits[1].source_id == "c");

  // Oracle: a linear scan over the stored entries with lowercase keys.
  std::vector<std::string> expected_ids;
  for (const ContactMap& m : db.entries) {
    if (m.part == "palm" && m.category == "box")
      expected_ids.push_back(m.source_id);
  }
  std::vector<std::string> got_ids;
  for (const ContactMap& m : hits) got_ids.push_back(m.source_id);
  CHECK(got_ids == expected_ids);

  CHECK(retrieval::query(db, "palm", "mug").size() == 1);
  CHECK(retrieval::query(db, "rest", "box").size() == 1);
  CHECK(retrieval::query(db, "rest", "mug").empty());
  CHECK(retrieval::query(db, "nope", "box").empty());
}

TEST_CASE("fit_initial_pose: recorded flush pose is a fixed point") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  const geom::TriMesh object = make_object_box();
  const ContactMap map =
      retrieval::ingest_frame(db, rig.template_mesh.vertices, object,
                              flush_pose(), "palm", "box", 0.03, "demo");
  REQUIRE(map.size() == 9);
  const RetrievalWeights weights;

  SUBCASE("starting from the recorded pose") {
    const RetrievalResult result = retrieval::fit_initial_pose(
        map, rig.template_mesh, db.part_vertices.at("palm"), object, weights,
        flush_pose());
    CHECK(result.e_fit < 1e-4);
    CHECK((result.object_state.translation - Vec3(0, 0.2, 0)).norm() < 1e-3);
    CHECK(geom::geodesic_angle(result.object_state.rotation,
                               Mat3::Identity()) < 1e-3);
    CHECK(result.e_pene == 0.0);
    CHECK(result.score == doctest::Approx(1e12).epsilon(1e-9));
  }
  SUBCASE("warm start recovers the recorded pose without an init") {
    const RetrievalResult result = retrieval::fit_initial_pose(
        map, rig.template_mesh, db.part_vertices.at("palm"), object, weights);
    CHECK(result.e_fit < 1e-4);
    CHECK((result.object_state.translation - Vec3(0, 0.2, 0)).norm() < 1e-3);
    CHECK(geom::geodesic_angle(result.object_state.rotation,
                               Mat3::Identity()) < 1e-3);
    CHECK(result.e_pene == 0.0);
    CHECK(result.score > 0.0);
  }
}

TEST_CASE("fit_initial_pose: Kabsch warm start solves an exact rigid fit") {
  const geom::TriMesh object = make_object_box();
  const int ia = vertex_index_of(object, Vec3(-0.1, -0.1, -0.1));
  const int ib = vertex_index_of(object, Vec3(0.1, -0.1, -0.1));
  const int ic = vertex_index_of(object, Vec3(-0.1, 0.1, 0.1));

  const Mat3 true_r = geom::axis_angle_to_matrix(Vec3(0.3, -0.2, 0.5));
  const Vec3 true_t(0.1, 0.05, -0.07);
  geom::TriMesh body;
  body.vertices = {true_r * object.vertices[ia] + true_t,
                   true_r * object.vertices[ib] + true_t,
                   true_r * object.vertices[ic] + true_t};

  ContactMap map;
  map.part = "palm";
  map.category = "box";
  map.pairs = {{0, ia}, {1, ib}, {2, ic}};

  RetrievalWeights weights;
  weights.lambda_cont = 0.0;
  weights.lambda_pene = 0.0;

  SUBCASE("warm start lands on the exact pose and stays") {
    const RetrievalResult result =
        retrieval::fit_initial_pose(map, body, {}, object, weights);
    CHECK((result.object_state.translation - true_t).norm() < 1e-8);
    CHECK(geom::geodesic_angle(result.object_state.rotation, true_r) < 1e-6);
    CHECK(result.e_fit < 1e-8);
    CHECK(result.trace.size() == 1);  // zero-gradient start: no steps taken
  }
  SUBCASE("identity init descends monotonically toward the pose") {
    const RetrievalResult result = retrieval::fit_initial_pose(
        map, body, {}, object, weights, RigidTransform{});
    CHECK(strictly_decreasing(result.trace));
    CHECK(result.trace.size() > 10);
    CHECK(result.e_fit < 0.2 * result.trace.front());
  }
}

TEST_CASE("fit_initial_pose: box escapes a sphere body") {
  const geom::TriMesh body = synth::make_icosphere(Vec3::Zero(), 0.25, 2);
  const geom::TriMesh object =
      synth::make_subdivided_box_mesh(Vec3::Zero(), Vec3(0.04, 0.04, 0.04),
                                      {2, 2, 2});
  ContactMap map;
  map.part = "palm";
  map.category = "box";
  map.pairs = {{0, 0}};

  const RetrievalResult start = retrieval::fit_initial_pose(
      map, body, {0}, object, [] {
        RetrievalWeights w;
        w.iterations = 0;
        return w;
      }(),
      RigidTransform{});
  REQUIRE(start.e_pene > 1.0);  // 26 vertices buried deep inside
  CHECK(start.score == 0.0);

  const RetrievalResult result = retrieval::fit_initial_pose(
      map, body, {0}, object, RetrievalWeights{}, RigidTransform{});
  CHECK(strictly_decreasing(result.trace));
  CHECK(result.e_pene < 1e-8);
  CHECK(result.e_pene < 1e-3 * start.e_pene);
  CHECK(result.object_state.translation.norm() > 0.15);
}

TEST_CASE("fit_initial_pose: frozen-pose energies match brute force") {
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  const geom::TriMesh object = make_object_box();
  const ContactMap map =
      retrieval::ingest_frame(db, rig.template_mesh.vertices, object,
                              flush_pose(), "palm", "box", 0.03);
  const std::vector<int> palm = db.part_vertices.at("palm");

  RetrievalWeights weights;
  weights.iterations = 0;

  RigidTransform probe;
  probe.rotation = geom::axis_angle_to_matrix(Vec3(0.1, 0.2, -0.1));

  SUBCASE("penetrating probe") { probe.translation = Vec3(0.03, 0.04, 0.02); }
  SUBCASE("clear probe") { probe.translation = Vec3(0, 0.35, 0); }

  const RetrievalResult result = retrieval::fit_initial_pose(
      map, rig.template_mesh, palm, object, weights, probe);

  double fit = 0.0;
  for (const auto& [dh, dobj] : map.pairs) {
    fit += (probe.apply(object.vertices[dobj]) -
            rig.template_mesh.vertices[dh])
               .norm();
  }
  double cont = 0.0;
  for (int dh : palm) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& v : object.vertices) {
      best = std::min(best,
                      (rig.template_mesh.vertices[dh] - probe.apply(v)).norm());
    }
    cont += best;
  }
  const geom::SdfGrid sdf = geom::build_sdf(rig.template_mesh, weights.sdf_cell,
                                            weights.sdf_padding);
  double pene = 0.0;
  for (const Vec3& v : object.vertices) {
    pene -= std::min(geom::query_sdf(sdf, probe.apply(v)), 0.0);
  }

  CHECK(result.e_fit == doctest::Approx(fit).epsilon(1e-12));
  CHECK(result.e_cont == doctest::Approx(cont).epsilon(1e-12));
  CHECK(result.e_pene == doctest::Approx(pene).epsilon(1e-12));
  CHECK(result.trace.size() == 1);
  if (pene > 0.0) {
    CHECK(result.score == 0.0);
  } else {
    CHECK(result.score == 1.0 / std::max(cont, 1e-12));
  }
}

TEST_CASE("fit_initial_pose: invalid inputs are rejected") {
  const geom::TriMesh object = make_object_box();
  geom::TriMesh body;
  body.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  RetrievalWeights weights;
  weights.lambda_pene = 0.0;  // bare point-set body has no SDF

  ContactMap map;
  map.part = "palm";
  map.category = "box";

  CHECK_THROWS_WITH_AS(
      retrieval::fit_initial_pose(map, body, {}, object, weights),
      Contains("no pairs"), std::invalid_argument);

  map.pairs = {{0, 999}};
  CHECK_THROWS_WITH_AS(
      retrieval::fit_initial_pose(map, body, {}, object, weights),
      Contains("out of range"), std::invalid_argument);

  map.pairs = {{0, 0}};
  CHECK_THROWS_WITH_AS(
      retrieval::fit_initial_pose(map, body, {999}, object, weights),
      Contains("part vertex index"), std::invalid_argument);

  RetrievalWeights negative = weights;
  negative.lambda_fit = -1.0;
  CHECK_THROWS_WITH_AS(
      retrieval::fit_initial_pose(map, body, {}, object, negative),
      Contains("nonnegative"), std::invalid_argument);

  CHECK_THROWS_WITH_AS(
      retrieval::fit_initial_pose(map, body, {}, geom::TriMesh{}, weights),
      Contains("empty object template"), std::invalid_argument);
}

TEST_CASE("select_pose: single candidate and zero-mass fallback") {
  const std::vector<RetrievalResult> one = {candidate(2.0, 0.0, 1)};
  for (std::uint64_t seed : {0, 1, 99}) {
    CHECK(retrieval::select_pose(one, seed).object_state.translation.x() ==
          1.0);
  }

  // Only one candidate carries mass: it always wins.
  const std::vector<RetrievalResult> spiked = {
      candidate(0.0, 1.0, 1), candidate(5.0, 0.0, 2), candidate(0.0, 2.0, 3)};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(retrieval::select_pose(spiked, seed).object_state.translation.x() ==
          2.0);
  }

  // All scores zero: deterministically the least-penetrating candidate.
  const std::vector<RetrievalResult> stuck = {
      candidate(0.0, 3.0, 1), candidate(0.0, 1.0, 2), candidate(0.0, 2.0, 3)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(retrieval::select_pose(stuck, seed).object_state.translation.x() ==
          2.0);
  }
  // Penetration ties break toward the lowest index.
  const std::vector<RetrievalResult> tied = {
      candidate(0.0, 2.0, 1), candidate(0.0, 1.0, 2), candidate(0.0, 1.0, 3)};
  CHECK(retrieval::select_pose(tied, 7).object_state.translation.x() == 2.0);
}

TEST_CASE("select_pose: sampling frequencies match score ratios") {
  const std::vector<RetrievalResult> pair = {candidate(1.0, 0.0, 1),
                                             candidate(3.0, 0.0, 2)};
  int picked_second = 0;
  const int draws = 10000;
  for (int seed = 0; seed < draws; ++seed) {
    if (retrieval::select_pose(pair, static_cast<std::uint64_t>(seed))
            .object_state.translation.x() == 2.0) {
      ++picked_second;
    }
  }
  const double freq = static_cast<double>(picked_second) / draws;
  CHECK(std::abs(freq - 0.75) < 0.02);
}

TEST_CASE("select_pose: argmax mode and empty input") {
  const std::vector<RetrievalResult> cands = {
      candidate(2.0, 0.0, 1), candidate(5.0, 0.0, 2), candidate(5.0, 0.0, 3)};
  // Highest score wins; ties break toward the lowest index.
  CHECK(retrieval::select_pose(cands, 0, /*argmax=*/true)
            .object_state.translation.x() == 2.0);
  CHECK_THROWS_WITH_AS(retrieval::select_pose({}, 0),
                       Contains("retrieval produced no pose"),
                       std::runtime_error);
}

TEST_CASE("interaction db: directory round trip is exact") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hoisynth_retrieval_db";
  fs::remove_all(dir);

  InteractionDB db = make_palm_db();
  retrieval::add_object_template(db, "mug",
                                 synth::make_icosphere(Vec3::Zero(), 0.05, 1));
  const body::BodyRig rig = make_palm_rig();
  const std::vector<Vec3>& verts = rig.template_mesh.vertices;
  RigidTransform lifted = flush_pose();
  lifted.translation.y() += 0.01;
  RigidTransform mug_pose;
  mug_pose.translation = Vec3(0, 0.15, 0);
  retrieval::ingest_frame(db, verts, make_object_box(), flush_pose(), "palm",
                          "box", 0.03, "a");
  retrieval::ingest_frame(db, verts, make_object_box(), lifted, "palm", "box",
                          0.03, "b");
  retrieval::ingest_frame(db, verts,
                          synth::make_icosphere(Vec3::Zero(), 0.05, 1),
                          mug_pose, "palm", "mug", 0.07, "c");
  REQUIRE(db.entries.size() == 3);

  retrieval::save_interaction_db(db, dir.string());
  const InteractionDB loaded = retrieval::load_interaction_db(dir.string());

  CHECK(loaded.part_names == db.part_names);
  REQUIRE(loaded.part_vertices.size() == db.part_vertices.size());
  for (const auto& [part, ids] : db.part_vertices) {
    CHECK(loaded.part_vertices.at(part) == ids);
  }
  REQUIRE(loaded.object_templates.size() == db.object_templates.size());
  for (const auto& [category, mesh] : db.object_templates) {
    const geom::TriMesh& got = loaded.object_templates.at(category);
    REQUIRE(got.vertices.size() == mesh.vertices.size());
    REQUIRE(got.faces.size() == mesh.faces.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      CHECK(got.vertices[i] == mesh.vertices[i]);  // %.17g text is exact
    }
  }
  REQUIRE(loaded.entries.size() == db.entries.size());
  for (std::size_t i = 0; i < db.entries.size(); ++i) {
    CHECK(loaded.entries[i].part == db.entries[i].part);
    CHECK(loaded.entries[i].category == db.entries[i].category);
    CHECK(loaded.entries[i].source_id == db.entries[i].source_id);
    CHECK(loaded.entries[i].pairs == db.entries[i].pairs);
  }
  fs::remove_all(dir);
}

TEST_CASE("interaction db: corrupt stores are rejected") {
  namespace fs = std::filesystem;
  CHECK_THROWS_WITH_AS(
      retrieval::load_interaction_db("/nonexistent/hoisynth_db"),
      Contains("cannot open manifest"), std::runtime_error);

  const fs::path dir = fs::temp_directory_path() / "hoisynth_retrieval_bad";
  fs::remove_all(dir);
  InteractionDB db = make_palm_db();
  const body::BodyRig rig = make_palm_rig();
  retrieval::ingest_frame(db, rig.template_mesh.vertices, make_object_box(),
                          flush_pose(), "palm", "box", 0.03, "a");
  retrieval::save_interaction_db(db, dir.string());

  SUBCASE("unknown category in a stored map") {
    std::ofstream out(dir / "maps.jsonl", std::ios::app);
    out << R"({"part":"palm","category":"ghost","pairs":[[0,0]]})" << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(retrieval::load_interaction_db(dir.string()),
                         Contains("unknown object"), std::runtime_error);
  }
  SUBCASE("duplicate pairs in a stored map") {
    std::ofstream out(dir / "maps.jsonl", std::ios::app);
    out << R"({"part":"palm","category":"box","pairs":[[1,2],[1,2]]})"
        << "\n";
    out.close();
    CHECK_THROWS_WITH_AS(retrieval::load_interaction_db(dir.string()),
                         Contains("duplicate"), std::runtime_error);
  }
  SUBCASE("malformed JSON line") {
    std::ofstream out(dir / "maps.jsonl", std::ios::app);
    out << "{not json\n";
    out.close();
    CHECK_THROWS_WITH_AS(retrieval::load_interaction_db(dir.string()),
                         Contains("maps.jsonl line"), std::runtime_error);
  }
  fs::remove_all(dir);
}
