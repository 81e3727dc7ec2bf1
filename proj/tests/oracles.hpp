// SPDX-License-Identifier: Apache-2.0
// Test-only reference implementations, kept independent of the library code
// they check: plain-array 4x4 homogeneous matrix algebra and a scalar
// pinhole evaluation.
#pragma once

#include "apsim/geom.hpp"

#include <array>
#include <cmath>
#include <random>

namespace oracle {

using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 identity4() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat4 from_transform(const apsim::HomogeneousTransform& t) {
  Mat4 m = identity4();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m[r][c] = t.rotation(r, c);
    m[r][3] = t.translation[r];
  }
  return m;
}

inline Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      for (int k = 0; k < 4; ++k) out[r][c] += a[r][k] * b[k][c];
  return out;
}

inline std::array<double, 3> apply(const Mat4& m, const std::array<double, 3>& p) {
  std::array<double, 4> h{p[0], p[1], p[2], 1.0};
  std::array<double, 4> out{};
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k) out[r] += m[r][k] * h[k];
  return {out[0], out[1], out[2]};
}

// Random rotation via three axis angles, built without Eigen.
inline Mat4 random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-3.14159265358979, 3.14159265358979);
  std::uniform_real_distribution<double> len(-2.0, 2.0);
  const double a = angle(rng), b = angle(rng), c = angle(rng);
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cc = std::cos(c), sc = std::sin(c);
  Mat4 rx = identity4(), ry = identity4(), rz = identity4();
  rx[1][1] = ca; rx[1][2] = -sa; rx[2][1] = sa; rx[2][2] = ca;
  ry[0][0] = cb; ry[0][2] = sb; ry[2][0] = -sb; ry[2][2] = cb;
  rz[0][0] = cc; rz[0][1] = -sc; rz[1][0] = sc; rz[1][1] = cc;
  Mat4 m = mul(mul(rz, ry), rx);
  for (int r = 0; r < 3; ++r) m[r][3] = len(rng);
  return m;
}

inline apsim::HomogeneousTransform to_transform(const Mat4& m) {
  apsim::HomogeneousTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = m[r][c];
    t.translation[r] = m[r][3];
  }
  return t;
}

}  // namespace oracle
