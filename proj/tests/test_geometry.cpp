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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/registration.h"
#include "hoisynth/geom/sdf.h"
#include "hoisynth/geom/transform.h"
#include "hoisynth/geom/types.h"
#include "hoisynth/synth/primitives.h"

using namespace hoisynth;
using geom::Mat3;
using geom::PointSet;
using geom::RigidTransform;
using geom::Vec3;

namespace {

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return Vec3(dist(rng), dist(rng), dist(rng));
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  Vec3 axis = random_vec(rng, -1.0, 1.0);
  while (axis.norm() < 1e-3) axis = random_vec(rng, -1.0, 1.0);
  return geom::axis_angle_to_matrix(axis.normalized() * angle(rng));
}

// Analytic SDF of an axis-aligned box centered at the origin.
double analytic_box_sdf(const Vec3& p, const Vec3& half) {
  const Vec3 q = p.cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

std::string temp_path(const std::string& name) {
  return "/tmp/hoisynth_geom_test_" + name;
}

}  // namespace

TEST_CASE("rigid transform validity, composition, inverse") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    RigidTransform a{random_rotation(rng), random_vec(rng, -2.0, 2.0)};
    RigidTransform b{random_rotation(rng), random_vec(rng, -2.0, 2.0)};
    CHECK(a.is_valid());
    const Vec3 p = random_vec(rng, -3.0, 3.0);
    CHECK((a.compose(b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
    CHECK((a.apply_inverse(a.apply(p)) - p).norm() < 1e-12);
    const RigidTransform id = a.compose(a.inverse());
    CHECK((id.rotation - Mat3::Identity()).norm() < 1e-12);
    CHECK(id.translation.norm() < 1e-12);
  }
  RigidTransform bad;
  bad.rotation(0, 0) = 2.0;
  CHECK_FALSE(bad.is_valid());
}

TEST_CASE("rodrigues map round trips axis-angle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(1e-8, 3.1);
  for (int trial = 0; trial < 200; ++trial) {
    Vec3 axis = random_vec(rng, -1.0, 1.0);
    while (axis.norm() < 1e-3) axis = random_vec(rng, -1.0, 1.0);
    const Vec3 aa = axis.normalized() * angle(rng);
    const Mat3 r = geom::axis_angle_to_matrix(aa);
    CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((geom::matrix_to_axis_angle(r) - aa).norm() < 1e-9);
  }
  // Tiny angles hit the series branch and must still round trip.
  const Vec3 tiny(1e-9, -2e-9, 5e-10);
  CHECK((geom::matrix_to_axis_angle(geom::axis_angle_to_matrix(tiny)) - tiny)
            .norm() < 1e-15);
  CHECK((geom::axis_angle_to_matrix(Vec3::Zero()) - Mat3::Identity()).norm() ==
        0.0);
}

TEST_CASE("axis-angle canonicalization wraps magnitude, preserves rotation") {
  const Vec3 axis = Vec3(1.0, 2.0, -1.0).normalized();
  const Vec3 wrapped = geom::canonicalize_axis_angle(axis * (2.0 * M_PI + 0.5));
  CHECK(wrapped.norm() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK((geom::axis_angle_to_matrix(wrapped) -
         geom::axis_angle_to_matrix(axis * (2.0 * M_PI + 0.5)))
            .norm() < 1e-12);
  CHECK(geom::canonicalize_axis_angle(Vec3::Zero()).norm() == 0.0);
  const Vec3 inside = axis * 1.25;
  CHECK((geom::canonicalize_axis_angle(inside) - inside).norm() == 0.0);
}

TEST_CASE("rotation jacobian matches finite differences") {
  std::mt19937_64 rng(13);
  const double h = 1e-6;
  for (int trial = 0; trial < 60; ++trial) {
    Vec3 aa = random_vec(rng, -2.0, 2.0);
    if (trial < 10) aa *= 1e-8;  // exercise the small-angle branch
    for (int axis = 0; axis < 3; ++axis) {
      Vec3 plus = aa, minus = aa;
      plus[axis] += h;
      minus[axis] -= h;
      const Mat3 fd = (geom::axis_angle_to_matrix(plus) -
                       geom::axis_angle_to_matrix(minus)) /
                      (2.0 * h);
      CHECK((geom::axis_angle_jacobian(aa, axis) - fd).norm() < 1e-6);
    }
  }
}

TEST_CASE("6d rotation encoding round trips and reprojects") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 r = random_rotation(rng);
    const Mat3 back = geom::rotation_from_6d(geom::rotation_to_6d(r));
    CHECK((back - r).norm() < 1e-12);
  }
  // Perturbed encodings must still decode to valid rotations.
  auto enc = geom::rotation_to_6d(random_rotation(rng));
  for (double& v : enc) v += 0.05;
  const Mat3 r = geom::rotation_from_6d(enc);
  CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthonormalize projects noisy matrices onto rotations") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 r = random_rotation(rng);
    Mat3 noisy = r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        noisy(i, j) += 1e-4 * ((trial + i + j) % 5 - 2);
    const Mat3 proj = geom::orthonormalize(noisy);
    CHECK((proj * proj.transpose() - Mat3::Identity()).norm() < 1e-12);
    CHECK(proj.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((proj - r).norm() < 1e-3);
  }
  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;
  CHECK(geom::orthonormalize(reflect).determinant() ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("geodesic angle recovers relative rotation magnitude") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 base = random_rotation(rng);
    const double theta = angle(rng);
    const Mat3 other =
        base * geom::axis_angle_to_matrix(Vec3::UnitZ() * theta);
    CHECK(geom::geodesic_angle(base, other) ==
          doctest::Approx(theta).epsilon(1e-7));
  }
  const Mat3 r = random_rotation(rng);
  CHECK(geom::geodesic_angle(r, r) == doctest::Approx(0.0));
}

TEST_CASE("kabsch: identity and pure translation") {
  PointSet src = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.3, 0.2, 0.9}};
  auto self = geom::kabsch_fit(src, src);
  CHECK((self.transform.rotation - Mat3::Identity()).norm() < 1e-12);
  CHECK(self.transform.translation.norm() < 1e-12);
  CHECK(self.rms < 1e-12);

  PointSet dst;
  const Vec3 t(1.0, 2.0, 3.0);
  for (const Vec3& p : src) dst.push_back(p + t);
  auto shifted = geom::kabsch_fit(src, dst);
  CHECK((shifted.transform.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK((shifted.transform.translation - t).norm() < 1e-9);
  CHECK(shifted.rms < 1e-12);
}

TEST_CASE("kabsch: random rigid round trip is a retraction") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> count(3, 20);
    const int n = count(rng);
    PointSet src;
    for (int i = 0; i < n; ++i) src.push_back(random_vec(rng, -1.0, 1.0));
    // Guard against accidentally collinear draws.
    src.push_back(src[0] + Vec3(0.5, 0, 0));
    src.push_back(src[0] + Vec3(0, 0.5, 0));
    const RigidTransform g{random_rotation(rng), random_vec(rng, -2.0, 2.0)};
    PointSet dst;
    for (const Vec3& p : src) dst.push_back(g.apply(p));
    const auto fit = geom::kabsch_fit(src, dst);
    CHECK((fit.transform.rotation - g.rotation).norm() < 1e-6);
    CHECK((fit.transform.translation - g.translation).norm() < 1e-6);
    CHECK(fit.rms < 1e-9);
  }
}

TEST_CASE("kabsch: noisy correspondences report a positive residual") {
  std::mt19937_64 rng(31);
  PointSet src, dst;
  for (int i = 0; i < 30; ++i) {
    src.push_back(random_vec(rng, -1.0, 1.0));
    dst.push_back(src.back() + 0.01 * random_vec(rng, -1.0, 1.0));
  }
  const auto fit = geom::kabsch_fit(src, dst);
  CHECK(fit.rms > 0.0);
  CHECK(fit.rms < 0.02);
  CHECK(fit.transform.is_valid());
}

TEST_CASE("kabsch: degenerate inputs raise underdetermined") {
  PointSet two = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_WITH_AS(geom::kabsch_fit(two, two),
                       doctest::Contains("underdetermined"),
                       std::runtime_error);
  PointSet line, line_dst;
  for (int i = 0; i < 6; ++i) {
    line.push_back(Vec3(0.2 * i, 0.4 * i, -0.1 * i));
    line_dst.push_back(line.back() + Vec3(1, 0, 0));
  }
  CHECK_THROWS_WITH_AS(geom::kabsch_fit(line, line_dst),
                       doctest::Contains("underdetermined"),
                       std::runtime_error);
  PointSet three = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(geom::kabsch_fit(three, two), std::invalid_argument);
}

TEST_CASE("nearest_on_mesh: pinned examples and tie-breaks") {
  geom::TriMesh point_cloud;
  point_cloud.vertices.push_back(Vec3::Zero());
  geom::finalize_mesh(point_cloud);
  const auto single =
      geom::nearest_on_mesh(point_cloud, RigidTransform{}, Vec3(0, 0, 1));
  CHECK(single.first == 0);
  CHECK(single.second == doctest::Approx(1.0).epsilon(1e-12));

  const auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.5, 0.5, 0.5));
  for (int i = 0; i < static_cast<int>(cube.vertices.size()); ++i) {
    const auto hit =
        geom::nearest_on_mesh(cube, RigidTransform{}, cube.vertices[i]);
    CHECK(hit.first == i);
    CHECK(hit.second == doctest::Approx(0.0));
  }

  geom::TriMesh pair;
  pair.vertices = {Vec3(1, 0, 0), Vec3(-1, 0, 0)};
  geom::finalize_mesh(pair);
  CHECK(geom::nearest_on_mesh(pair, RigidTransform{}, Vec3::Zero()).first == 0);
}

TEST_CASE("nearest_on_mesh: matches exhaustive search under random poses") {
  std::mt19937_64 rng(37);
  const auto mesh = synth::make_icosphere(Vec3(0.1, -0.2, 0.3), 0.4, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const RigidTransform pose{random_rotation(rng), random_vec(rng, -1, 1)};
    const Vec3 query = random_vec(rng, -2.0, 2.0);
    const auto fast = geom::nearest_on_mesh(mesh, pose, query);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
      const double d = (pose.apply(mesh.vertices[i]) - query).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    CHECK(fast.first == best);
    CHECK(fast.second == doctest::Approx(best_d).epsilon(1e-12));
  }
}

TEST_CASE("mesh validation and watertightness") {
  auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.5, 0.5, 0.5));
  CHECK(cube.watertight);
  CHECK(cube.vertices.size() == 8);
  CHECK(cube.faces.size() == 12);

  geom::TriMesh open = cube;
  open.faces.pop_back();
  geom::finalize_mesh(open);
  CHECK_FALSE(open.watertight);

  geom::TriMesh bad_index = cube;
  bad_index.faces.push_back({0, 1, 99});
  CHECK_THROWS_AS(geom::finalize_mesh(bad_index), std::runtime_error);

  geom::TriMesh degenerate = cube;
  degenerate.faces.push_back({0, 0, 1});
  CHECK_THROWS_AS(geom::finalize_mesh(degenerate), std::runtime_error);
}

TEST_CASE("subdivided box: welded lattice vertex counts") {
  const auto hand = synth::make_subdivided_box_mesh(
      Vec3::Zero(), Vec3(0.06, 0.04, 0.04), {2, 1, 1});
  CHECK(hand.vertices.size() == 12);
  CHECK(hand.watertight);
  const auto fine = synth::make_subdivided_box_mesh(Vec3::Zero(),
                                                    Vec3(0.5, 0.5, 0.5),
                                                    {3, 3, 3});
  // Full lattice minus strict interior: 4^3 - 2^3.
  CHECK(fine.vertices.size() == 64 - 8);
  CHECK(fine.watertight);
  // Euler characteristic of a sphere-like surface.
  const int v = static_cast<int>(fine.vertices.size());
  const int f = static_cast<int>(fine.faces.size());
  CHECK(v - (3 * f) / 2 + f == 2);
}

TEST_CASE("icosphere: watertight with vertices on the sphere") {
  const Vec3 center(0.2, 0.0, -0.1);
  const auto sphere = synth::make_icosphere(center, 0.7, 3);
  CHECK(sphere.watertight);
  CHECK(sphere.vertices.size() == 642);
  for (const Vec3& v : sphere.vertices) {
    CHECK((v - center).norm() == doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("obj io: save/load round trip and index forms") {
  const auto mesh = synth::make_icosphere(Vec3(0.01, -0.02, 0.03), 0.3, 1);
  const std::string path = temp_path("roundtrip.obj");
  geom::save_obj(mesh, path);
  const auto back = geom::load_obj(path);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.faces.size() == mesh.faces.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK((back.vertices[i] - mesh.vertices[i]).norm() == 0.0);
  }
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    CHECK(back.faces[i] == mesh.faces[i]);
  }
  CHECK(back.watertight);
  std::remove(path.c_str());

  const std::string slashed = temp_path("slashed.obj");
  {
    std::ofstream out(slashed);
    out << "# comment line\n"
        << "v 0 0 0\nv 1 0 0\nv 0 1 0\n"
        << "vn 0 0 1\n"
        << "f 1/1/1 2/2/1 3/3/1\n";
  }
  const auto tri = geom::load_obj(slashed);
  CHECK(tri.vertices.size() == 3);
  REQUIRE(tri.faces.size() == 1);
  CHECK(tri.faces[0] == std::array<int, 3>{0, 1, 2});
  std::remove(slashed.c_str());

  CHECK_THROWS_AS(geom::load_obj(temp_path("missing.obj")),
                  std::runtime_error);
}

TEST_CASE("sdf: unit cube pinned queries") {
  const auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.5, 0.5, 0.5));
  const double cell = 0.01;
  const auto grid = geom::build_sdf(cube, cell, 0.05);
  CHECK(std::abs(geom::query_sdf(grid, Vec3::Zero()) - (-0.5)) <= cell);
  CHECK(std::abs(geom::query_sdf(grid, Vec3(0.5, 0, 0))) <= cell);
  CHECK(std::abs(geom::query_sdf(grid, Vec3(1.0, 0, 0)) - 0.5) <= cell);
}

TEST_CASE("sdf: unit sphere pinned queries") {
  const auto sphere = synth::make_icosphere(Vec3::Zero(), 1.0, 3);
  const double cell = 0.05;
  const auto grid = geom::build_sdf(sphere, cell, 0.15);
  CHECK(std::abs(geom::query_sdf(grid, Vec3::Zero()) - (-1.0)) <= cell);
  CHECK(std::abs(geom::query_sdf(grid, Vec3(0, 1.0, 0))) <= cell);
  CHECK(std::abs(geom::query_sdf(grid, Vec3(2.0, 0, 0)) - 1.0) <= cell);
}

TEST_CASE("sdf: accuracy vs analytic fields inside the padded grid") {
  std::mt19937_64 rng(41);
  const double cell = 0.025;

  const Vec3 half(0.3, 0.25, 0.4);
  const auto box_grid =
      geom::build_sdf(synth::make_box_mesh(Vec3::Zero(), half), cell, 0.1);
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      std::uniform_real_distribution<double> in(box_grid.origin[a],
                                                box_grid.max_corner()[a]);
      p[a] = in(rng);
    }
    CHECK(std::abs(geom::query_sdf(box_grid, p) - analytic_box_sdf(p, half)) <=
          1.5 * cell);
  }

  const double radius = 0.45;
  const auto sphere_grid = geom::build_sdf(
      synth::make_icosphere(Vec3::Zero(), radius, 3), cell, 0.1);
  for (int trial = 0; trial < 500; ++trial) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) {
      std::uniform_real_distribution<double> in(sphere_grid.origin[a],
                                                sphere_grid.max_corner()[a]);
      p[a] = in(rng);
    }
    CHECK(std::abs(geom::query_sdf(sphere_grid, p) - (p.norm() - radius)) <=
          1.5 * cell);
  }
}

TEST_CASE("sdf: sign flips exactly once along transversal rays") {
  std::mt19937_64 rng(43);
  const Vec3 half(0.5, 0.5, 0.5);
  const double cell = 0.02;
  const auto grid =
      geom::build_sdf(synth::make_box_mesh(Vec3::Zero(), half), cell, 0.08);
  std::uniform_real_distribution<double> lateral(-0.3, 0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const double y = lateral(rng), z = lateral(rng);
    int flips = 0;
    double prev = geom::query_sdf(grid, Vec3(-0.56, y, z));
    // March from just outside the -x wall to the cube center.
    for (double x = -0.56 + cell; x <= 0.0; x += cell) {
      const double cur = geom::query_sdf(grid, Vec3(x, y, z));
      if ((prev < 0.0) != (cur < 0.0)) ++flips;
      prev = cur;
    }
    CHECK(flips == 1);
  }
}

TEST_CASE("sdf: preconditions and error strings") {
  auto open = synth::make_box_mesh(Vec3::Zero(), Vec3(0.5, 0.5, 0.5));
  open.faces.pop_back();
  geom::finalize_mesh(open);
  CHECK_THROWS_WITH_AS(geom::build_sdf(open, 0.05, 0.1),
                       doctest::Contains("sign undefined"),
                       std::runtime_error);
  const auto cube = synth::make_box_mesh(Vec3::Zero(), Vec3(0.5, 0.5, 0.5));
  CHECK_THROWS_AS(geom::build_sdf(cube, 0.0, 0.1), std::runtime_error);
  geom::TriMesh empty;
  CHECK_THROWS_AS(geom::build_sdf(empty, 0.05, 0.1), std::runtime_error);
}

TEST_CASE("sdf: gradient matches finite differences off the lattice") {
  std::mt19937_64 rng(47);
  const auto grid = geom::build_sdf(
      synth::make_icosphere(Vec3::Zero(), 0.4, 2), 0.04, 0.1);
  std::uniform_real_distribution<double> local(0.2, 0.8);
  std::uniform_int_distribution<int> cx(0, grid.dims[0] - 2),
      cy(0, grid.dims[1] - 2), cz(0, grid.dims[2] - 2);
  const double h = 1e-7;
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p = grid.node_position(cx(rng), cy(rng), cz(rng)) +
                   grid.cell * Vec3(local(rng), local(rng), local(rng));
    const Vec3 g = geom::query_sdf_gradient(grid, p);
    for (int a = 0; a < 3; ++a) {
      Vec3 plus = p, minus = p;
      plus[a] += h;
      minus[a] -= h;
      const double fd =
          (geom::query_sdf(grid, plus) - geom::query_sdf(grid, minus)) /
          (2.0 * h);
      CHECK(g[a] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
    }
  }
  // Far outside the grid the gradient follows the Euclidean excess.
  // (Coordinates chosen off the lattice planes, where the piecewise
  // gradient is continuous.)
  const Vec3 far(3.0, 0.113, -0.207);
  const Vec3 g = geom::query_sdf_gradient(grid, far);
  for (int a = 0; a < 3; ++a) {
    Vec3 plus = far, minus = far;
    plus[a] += h;
    minus[a] -= h;
    const double fd =
        (geom::query_sdf(grid, plus) - geom::query_sdf(grid, minus)) /
        (2.0 * h);
    CHECK(g[a] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
  }
}

TEST_CASE("sdf: binary serialization round trip") {
  const auto grid = geom::build_sdf(
      synth::make_box_mesh(Vec3(0.1, 0.2, 0.3), Vec3(0.2, 0.3, 0.25)), 0.05,
      0.1);
  const std::string path = temp_path("grid.sdf");
  geom::save_sdf(grid, path);
  const auto back = geom::load_sdf(path);
  CHECK(back.origin == grid.origin);
  CHECK(back.cell == grid.cell);
  CHECK(back.dims == grid.dims);
  REQUIRE(back.values.size() == grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    CHECK(back.values[i] == grid.values[i]);
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(geom::load_sdf(temp_path("missing.sdf")),
                  std::runtime_error);
}

TEST_CASE("sdf: object-local grid queried through a pose matches a rebuilt grid") {
  // Moving the mesh and querying the static grid through the inverse pose
  // is the cheap equivalent of rebuilding the SDF at the new pose.
  std::mt19937_64 rng(53);
  const auto mesh = synth::make_box_mesh(Vec3::Zero(), Vec3(0.3, 0.2, 0.25));
  const auto local_grid = geom::build_sdf(mesh, 0.02, 0.1);
  const RigidTransform pose{random_rotation(rng), Vec3(0.4, -0.2, 0.7)};
  geom::TriMesh moved = mesh;
  for (Vec3& v : moved.vertices) v = pose.apply(v);
  geom::finalize_mesh(moved);
  const auto moved_grid = geom::build_sdf(moved, 0.02, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 p = pose.apply(random_vec(rng, -0.35, 0.35));
    const double via_pose = geom::query_sdf(local_grid, pose.apply_inverse(p));
    const double direct = geom::query_sdf(moved_grid, p);
    CHECK(std::abs(via_pose - direct) <= 0.04);
  }
}
