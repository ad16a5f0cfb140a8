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

#include "hoisynth/geom/registration.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace hoisynth::geom {

KabschResult kabsch_fit(const PointSet& src, const PointSet& dst) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("kabsch_fit: point sets differ in size");
  }
  const std::size_t n = src.size();
  if (n < 3) {
    throw std::runtime_error("kabsch_fit: underdetermined (need >= 3 points)");
  }

  Vec3 c_src = Vec3::Zero();
  Vec3 c_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    c_src += src[i];
    c_dst += dst[i];
  }
  c_src /= static_cast<double>(n);
  c_dst /= static_cast<double>(n);

  Mat3 cov = Mat3::Zero();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = src[i] - c_src;
    const Vec3 q = dst[i] - c_dst;
    cov += q * p.transpose();
    scale = std::max(scale, std::max(p.squaredNorm(), q.squaredNorm()));
  }

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  // Rotation is unique only when the two smallest singular values are
  // separated from zero: collinear inputs leave a free spin about the line.
  const double sv_tol = 1e-9 * std::max(scale, 1e-300);
  if (sv(1) <= sv_tol) {
    throw std::runtime_error("kabsch_fit: underdetermined (degenerate point configuration)");
  }

  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) {
    d(2, 2) = -1.0;
  }
  KabschResult result;
  result.transform.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  result.transform.translation = c_dst - result.transform.rotation * c_src;

  double sq_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sq_sum += (result.transform.apply(src[i]) - dst[i]).squaredNorm();
  }
  result.rms = std::sqrt(sq_sum / static_cast<double>(n));
  return result;
}

}  // namespace hoisynth::geom
