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

#include "hoisynth/geom/mesh.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace hoisynth::geom {

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.expand(v);
  return box;
}

bool is_watertight(const TriMesh& mesh) {
  if (mesh.faces.empty()) return false;
  const auto n = static_cast<long long>(mesh.vertices.size());
  std::unordered_map<long long, int> directed;
  directed.reserve(mesh.faces.size() * 3);
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      const long long a = f[e];
      const long long b = f[(e + 1) % 3];
      if (++directed[a * n + b] > 1) return false;  // non-manifold edge
    }
  }
  for (const auto& [key, count] : directed) {
    const long long a = key / n;
    const long long b = key % n;
    auto it = directed.find(b * n + a);
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

void finalize_mesh(TriMesh& mesh) {
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) {
        throw std::runtime_error("mesh face index out of range");
      }
    }
    const Vec3& a = mesh.vertices[f[0]];
    const Vec3& b = mesh.vertices[f[1]];
    const Vec3& c = mesh.vertices[f[2]];
    if ((b - a).cross(c - a).norm() <= 1e-14) {
      throw std::runtime_error("mesh contains a degenerate (zero-area) face");
    }
  }
  mesh.watertight = is_watertight(mesh);
}

TriMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open OBJ file: " + path);
  TriMesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 2) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      if (ss.fail()) throw std::runtime_error("malformed OBJ vertex: " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      int count = 0;
      std::string token;
      while (ss >> token) {
        if (count >= 3) {
          throw std::runtime_error("OBJ face is not a triangle: " + line);
        }
        // "a", "a/b", "a//c", "a/b/c" all start with the vertex index.
        f[count++] = std::stoi(token) - 1;
      }
      if (count != 3) {
        throw std::runtime_error("OBJ face is not a triangle: " + line);
      }
      mesh.faces.push_back(f);
    }
  }
  finalize_mesh(mesh);
  return mesh;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write OBJ file: " + path);
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

std::pair<int, double> nearest_on_mesh(const TriMesh& mesh,
                                       const RigidTransform& pose,
                                       const Vec3& point) {
  if (mesh.vertices.empty()) {
    throw std::runtime_error("nearest_on_mesh: empty mesh");
  }
  // Compare in object-local coordinates; rigid transforms preserve
  // distances, so the argmin is unchanged.
  const Vec3 local = pose.apply_inverse(point);
  int best = 0;
  double best_sq = (mesh.vertices[0] - local).squaredNorm();
  for (int i = 1; i < static_cast<int>(mesh.vertices.size()); ++i) {
    const double d = (mesh.vertices[i] - local).squaredNorm();
    if (d < best_sq) {
      best_sq = d;
      best = i;
    }
  }
  return {best, std::sqrt(best_sq)};
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace hoisynth::geom
