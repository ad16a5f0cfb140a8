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

#include "hoisynth/geom/transform.h"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace hoisynth::geom {

bool RigidTransform::is_valid(double tol) const {
  const Mat3 rrt = rotation * rotation.transpose();
  if ((rrt - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Mat3 axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-12) {
    // Second-order expansion keeps the map smooth through zero.
    Mat3 k = Mat3::Zero();
    k << 0, -aa.z(), aa.y(), aa.z(), 0, -aa.x(), -aa.y(), aa.x(), 0;
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

Vec3 matrix_to_axis_angle(const Mat3& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

Vec3 canonicalize_axis_angle(const Vec3& aa) {
  const double two_pi = 2.0 * M_PI;
  double angle = aa.norm();
  if (angle < two_pi) return aa;
  const Vec3 axis = aa / angle;
  angle = std::fmod(angle, two_pi);
  return angle * axis;
}

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace

Mat3 axis_angle_jacobian(const Vec3& aa, int axis) {
  Vec3 e = Vec3::Zero();
  e[axis] = 1.0;
  const double angle = aa.norm();
  if (angle < 1e-6) {
    // dR/dw_a at w ≈ 0: [e]x + (1/2)([e]x[w]x + [w]x[e]x), error O(|w|^2).
    const Mat3 ek = skew(e);
    const Mat3 wk = skew(aa);
    return ek + 0.5 * (ek * wk + wk * ek);
  }
  // Gallego & Yezzi closed form.
  const Mat3 r = axis_angle_to_matrix(aa);
  const Vec3 cross = aa.cross((Mat3::Identity() - r) * e);
  return ((aa[axis] * skew(aa) + skew(cross)) / (angle * angle)) * r;
}

std::array<double, 6> rotation_to_6d(const Mat3& r) {
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

Mat3 rotation_from_6d(const std::array<double, 6>& v) {
  Vec3 a1(v[0], v[1], v[2]);
  Vec3 a2(v[3], v[4], v[5]);
  Vec3 b1 = a1.norm() > 1e-12 ? Vec3(a1.normalized()) : Vec3::UnitX();
  Vec3 u2 = a2 - b1.dot(a2) * b1;
  Vec3 b2 = u2.norm() > 1e-12 ? Vec3(u2.normalized())
                              : b1.unitOrthogonal();
  Vec3 b3 = b1.cross(b2);
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b3;
  return r;
}

Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant();
  return svd.matrixU() * d * svd.matrixV().transpose();
}

double geodesic_angle(const Mat3& a, const Mat3& b) {
  const double c = ((a * b.transpose()).trace() - 1.0) * 0.5;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace hoisynth::geom
