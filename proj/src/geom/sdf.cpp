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

#include "hoisynth/geom/sdf.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace hoisynth::geom {

namespace {

// Robust sign of the 2D cross product, with a deterministic tie rule for
// points exactly on an edge (keeps intersection parity consistent).
int orientation(double x1, double y1, double x2, double y2,
                double& twice_signed_area) {
  twice_signed_area = y1 * x2 - x1 * y2;
  if (twice_signed_area > 0) return 1;
  if (twice_signed_area < 0) return -1;
  if (y2 > y1) return 1;
  if (y2 < y1) return -1;
  if (x1 > x2) return 1;
  if (x1 < x2) return -1;
  return 0;  // degenerate
}

// 2D point-in-triangle with barycentric output; consistent across shared
// edges thanks to the orientation tie rule.
bool point_in_triangle_2d(double x0, double y0, double x1, double y1,
                          double x2, double y2, double x3, double y3,
                          double& a, double& b, double& c) {
  x1 -= x0;
  x2 -= x0;
  x3 -= x0;
  y1 -= y0;
  y2 -= y0;
  y3 -= y0;
  const int signa = orientation(x2, y2, x3, y3, a);
  if (signa == 0) return false;
  const int signb = orientation(x3, y3, x1, y1, b);
  if (signb != signa) return false;
  const int signc = orientation(x1, y1, x2, y2, c);
  if (signc != signa) return false;
  const double sum = a + b + c;
  a /= sum;
  b /= sum;
  c /= sum;
  return true;
}

struct Builder {
  const TriMesh& mesh;
  SdfGrid grid;
  std::vector<int> closest_tri;

  double tri_distance(const Vec3& p, int t) const {
    const auto& f = mesh.faces[t];
    return (p - closest_point_on_triangle(p, mesh.vertices[f[0]],
                                          mesh.vertices[f[1]],
                                          mesh.vertices[f[2]]))
        .norm();
  }

  void check_node(int i, int j, int k, int t) {
    const int idx = grid.index(i, j, k);
    const double d = tri_distance(grid.node_position(i, j, k), t);
    if (d < grid.values[idx]) {
      grid.values[idx] = static_cast<float>(d);
      closest_tri[idx] = t;
    }
  }

  void seed_band(int band) {
    const double inv = 1.0 / grid.cell;
    for (int t = 0; t < static_cast<int>(mesh.faces.size()); ++t) {
      const auto& f = mesh.faces[t];
      Aabb box;
      for (int v : f) box.expand(mesh.vertices[v]);
      const Vec3 lo = (box.min - grid.origin) * inv;
      const Vec3 hi = (box.max - grid.origin) * inv;
      const int i0 = std::clamp(static_cast<int>(std::floor(lo.x())) - band, 0,
                                grid.dims[0] - 1);
      const int j0 = std::clamp(static_cast<int>(std::floor(lo.y())) - band, 0,
                                grid.dims[1] - 1);
      const int k0 = std::clamp(static_cast<int>(std::floor(lo.z())) - band, 0,
                                grid.dims[2] - 1);
      const int i1 = std::clamp(static_cast<int>(std::ceil(hi.x())) + band, 0,
                                grid.dims[0] - 1);
      const int j1 = std::clamp(static_cast<int>(std::ceil(hi.y())) + band, 0,
                                grid.dims[1] - 1);
      const int k1 = std::clamp(static_cast<int>(std::ceil(hi.z())) + band, 0,
                                grid.dims[2] - 1);
      for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
          for (int i = i0; i <= i1; ++i) check_node(i, j, k, t);
    }
  }

  void propagate(int i, int j, int k, int ni, int nj, int nk) {
    if (ni < 0 || ni >= grid.dims[0] || nj < 0 || nj >= grid.dims[1] ||
        nk < 0 || nk >= grid.dims[2]) {
      return;
    }
    const int src = closest_tri[grid.index(ni, nj, nk)];
    if (src < 0) return;
    check_node(i, j, k, src);
  }

  void sweep(int di, int dj, int dk) {
    const int i0 = di > 0 ? 1 : grid.dims[0] - 2;
    const int i1 = di > 0 ? grid.dims[0] : -1;
    const int j0 = dj > 0 ? 1 : grid.dims[1] - 2;
    const int j1 = dj > 0 ? grid.dims[1] : -1;
    const int k0 = dk > 0 ? 1 : grid.dims[2] - 2;
    const int k1 = dk > 0 ? grid.dims[2] : -1;
    for (int k = k0; k != k1; k += dk)
      for (int j = j0; j != j1; j += dj)
        for (int i = i0; i != i1; i += di) {
          propagate(i, j, k, i - di, j, k);
          propagate(i, j, k, i, j - dj, k);
          propagate(i, j, k, i, j, k - dk);
          propagate(i, j, k, i - di, j - dj, k);
          propagate(i, j, k, i - di, j, k - dk);
          propagate(i, j, k, i, j - dj, k - dk);
          propagate(i, j, k, i - di, j - dj, k - dk);
        }
  }

  // Counts ray crossings along +x per lattice column; odd prefix = inside.
  void apply_sign() {
    std::vector<uint8_t> crossings(grid.values.size(), 0);
    const double inv = 1.0 / grid.cell;
    for (const auto& f : mesh.faces) {
      const Vec3& p = mesh.vertices[f[0]];
      const Vec3& q = mesh.vertices[f[1]];
      const Vec3& r = mesh.vertices[f[2]];
      const double ylo = std::min({p.y(), q.y(), r.y()});
      const double yhi = std::max({p.y(), q.y(), r.y()});
      const double zlo = std::min({p.z(), q.z(), r.z()});
      const double zhi = std::max({p.z(), q.z(), r.z()});
      const int j0 = std::clamp(
          static_cast<int>(std::ceil((ylo - grid.origin.y()) * inv)), 0,
          grid.dims[1] - 1);
      const int j1 = std::clamp(
          static_cast<int>(std::floor((yhi - grid.origin.y()) * inv)), 0,
          grid.dims[1] - 1);
      const int k0 = std::clamp(
          static_cast<int>(std::ceil((zlo - grid.origin.z()) * inv)), 0,
          grid.dims[2] - 1);
      const int k1 = std::clamp(
          static_cast<int>(std::floor((zhi - grid.origin.z()) * inv)), 0,
          grid.dims[2] - 1);
      for (int k = k0; k <= k1; ++k) {
        const double z = grid.origin.z() + k * grid.cell;
        for (int j = j0; j <= j1; ++j) {
          const double y = grid.origin.y() + j * grid.cell;
          double a, b, c;
          if (!point_in_triangle_2d(y, z, p.y(), p.z(), q.y(), q.z(), r.y(),
                                    r.z(), a, b, c)) {
            continue;
          }
          const double fx = a * p.x() + b * q.x() + c * r.x();
          const double fi = (fx - grid.origin.x()) * inv;
          // the crossing lies between node (ceil(fi) - 1) and node ceil(fi)
          const int interval = static_cast<int>(std::ceil(fi));
          if (interval < 0) {
            ++crossings[grid.index(0, j, k)];
          } else if (interval < grid.dims[0]) {
            ++crossings[grid.index(interval, j, k)];
          }  // crossings beyond the grid never affect node parity
        }
      }
    }
    for (int k = 0; k < grid.dims[2]; ++k)
      for (int j = 0; j < grid.dims[1]; ++j) {
        int total = 0;
        for (int i = 0; i < grid.dims[0]; ++i) {
          total += crossings[grid.index(i, j, k)];
          if (total % 2 == 1) {
            grid.values[grid.index(i, j, k)] *= -1.0f;
          }
        }
      }
  }
};

}  // namespace

SdfGrid build_sdf(const TriMesh& mesh, double cell_size, double padding) {
  if (cell_size <= 0) throw std::runtime_error("build_sdf: cell_size <= 0");
  if (!mesh.watertight) {
    throw std::runtime_error("build_sdf: sign undefined (mesh not watertight)");
  }
  const Aabb box = mesh.bounds();
  if (!box.valid() || (box.extent().array() <= 0.0).any()) {
    throw std::runtime_error("build_sdf: degenerate mesh AABB");
  }

  Builder b{mesh, {}, {}};
  b.grid.cell = cell_size;
  b.grid.origin = box.min - Vec3::Constant(padding);
  const Vec3 span = box.extent() + Vec3::Constant(2.0 * padding);
  for (int a = 0; a < 3; ++a) {
    b.grid.dims[a] = static_cast<int>(std::ceil(span[a] / cell_size)) + 1;
  }
  const size_t total = static_cast<size_t>(b.grid.dims[0]) * b.grid.dims[1] *
                       b.grid.dims[2];
  b.grid.values.assign(total, std::numeric_limits<float>::max());
  b.closest_tri.assign(total, -1);

  b.seed_band(2);
  for (int pass = 0; pass < 2; ++pass) {
    b.sweep(+1, +1, +1);
    b.sweep(-1, -1, -1);
    b.sweep(+1, +1, -1);
    b.sweep(-1, -1, +1);
    b.sweep(+1, -1, +1);
    b.sweep(-1, +1, -1);
    b.sweep(+1, -1, -1);
    b.sweep(-1, +1, +1);
  }
  b.apply_sign();
  return b.grid;
}

namespace {

struct CellLookup {
  int i, j, k;          // base node
  double fx, fy, fz;    // fractional offsets in [0, 1]
  Vec3 clamped;         // query point clamped into the grid
  bool outside;
};

CellLookup locate(const SdfGrid& grid, const Vec3& point) {
  CellLookup lu;
  const Vec3 max = grid.max_corner();
  lu.clamped = point.cwiseMax(grid.origin).cwiseMin(max);
  lu.outside = (lu.clamped - point).squaredNorm() > 0;
  const Vec3 local = (lu.clamped - grid.origin) / grid.cell;
  lu.i = std::clamp(static_cast<int>(std::floor(local.x())), 0,
                    grid.dims[0] - 2);
  lu.j = std::clamp(static_cast<int>(std::floor(local.y())), 0,
                    grid.dims[1] - 2);
  lu.k = std::clamp(static_cast<int>(std::floor(local.z())), 0,
                    grid.dims[2] - 2);
  lu.fx = std::clamp(local.x() - lu.i, 0.0, 1.0);
  lu.fy = std::clamp(local.y() - lu.j, 0.0, 1.0);
  lu.fz = std::clamp(local.z() - lu.k, 0.0, 1.0);
  return lu;
}

}  // namespace

double query_sdf(const SdfGrid& grid, const Vec3& point) {
  const CellLookup lu = locate(grid, point);
  const double c000 = grid.at(lu.i, lu.j, lu.k);
  const double c100 = grid.at(lu.i + 1, lu.j, lu.k);
  const double c010 = grid.at(lu.i, lu.j + 1, lu.k);
  const double c110 = grid.at(lu.i + 1, lu.j + 1, lu.k);
  const double c001 = grid.at(lu.i, lu.j, lu.k + 1);
  const double c101 = grid.at(lu.i + 1, lu.j, lu.k + 1);
  const double c011 = grid.at(lu.i, lu.j + 1, lu.k + 1);
  const double c111 = grid.at(lu.i + 1, lu.j + 1, lu.k + 1);
  const double c00 = c000 * (1 - lu.fx) + c100 * lu.fx;
  const double c10 = c010 * (1 - lu.fx) + c110 * lu.fx;
  const double c01 = c001 * (1 - lu.fx) + c101 * lu.fx;
  const double c11 = c011 * (1 - lu.fx) + c111 * lu.fx;
  const double c0 = c00 * (1 - lu.fy) + c10 * lu.fy;
  const double c1 = c01 * (1 - lu.fy) + c11 * lu.fy;
  double value = c0 * (1 - lu.fz) + c1 * lu.fz;
  if (lu.outside) value += (point - lu.clamped).norm();
  return value;
}

Vec3 query_sdf_gradient(const SdfGrid& grid, const Vec3& point) {
  const CellLookup lu = locate(grid, point);
  const double c000 = grid.at(lu.i, lu.j, lu.k);
  const double c100 = grid.at(lu.i + 1, lu.j, lu.k);
  const double c010 = grid.at(lu.i, lu.j + 1, lu.k);
  const double c110 = grid.at(lu.i + 1, lu.j + 1, lu.k);
  const double c001 = grid.at(lu.i, lu.j, lu.k + 1);
  const double c101 = grid.at(lu.i + 1, lu.j, lu.k + 1);
  const double c011 = grid.at(lu.i, lu.j + 1, lu.k + 1);
  const double c111 = grid.at(lu.i + 1, lu.j + 1, lu.k + 1);
  const double fx = lu.fx, fy = lu.fy, fz = lu.fz;
  Vec3 g;
  g.x() = ((c100 - c000) * (1 - fy) + (c110 - c010) * fy) * (1 - fz) +
          ((c101 - c001) * (1 - fy) + (c111 - c011) * fy) * fz;
  g.y() = ((c010 - c000) * (1 - fx) + (c110 - c100) * fx) * (1 - fz) +
          ((c011 - c001) * (1 - fx) + (c111 - c101) * fx) * fz;
  g.z() = ((c001 - c000) * (1 - fx) + (c101 - c100) * fx) * (1 - fy) +
          ((c011 - c010) * (1 - fx) + (c111 - c110) * fx) * fy;
  g /= grid.cell;
  if (lu.outside) {
    // d/dp of (value(clamp(p)) + |p - clamp(p)|): clamped axes contribute
    // through the excess direction only.
    const Vec3 diff = point - lu.clamped;
    const double norm = diff.norm();
    for (int a = 0; a < 3; ++a) {
      const bool clamped_axis =
          point[a] < grid.origin[a] || point[a] > grid.max_corner()[a];
      if (clamped_axis) g[a] = norm > 0 ? diff[a] / norm : 0.0;
    }
  }
  return g;
}

void save_sdf(const SdfGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write SDF file: " + path);
  const char magic[8] = {'S', 'D', 'F', 'G', 'R', 'I', 'D', '1'};
  out.write(magic, 8);
  double header[4] = {grid.origin.x(), grid.origin.y(), grid.origin.z(),
                      grid.cell};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  uint32_t dims[3] = {static_cast<uint32_t>(grid.dims[0]),
                      static_cast<uint32_t>(grid.dims[1]),
                      static_cast<uint32_t>(grid.dims[2])};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
}

SdfGrid load_sdf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open SDF file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "SDFGRID1", 8) != 0) {
    throw std::runtime_error("bad SDF file magic: " + path);
  }
  SdfGrid grid;
  double header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  grid.origin = Vec3(header[0], header[1], header[2]);
  grid.cell = header[3];
  uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  for (int a = 0; a < 3; ++a) grid.dims[a] = static_cast<int>(dims[a]);
  const size_t total =
      static_cast<size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
  grid.values.resize(total);
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(total * sizeof(float)));
  if (!in) throw std::runtime_error("truncated SDF file: " + path);
  return grid;
}

}  // namespace hoisynth::geom
