// Copyright 2026  The pqr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pqr/common.hpp"

#include <cstdio>

namespace pqr {

Vec3 rotate_about_axis(const Vec3& p, const Vec3& origin, const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return p;
  const Vec3 k = axis * (1.0 / n);
  const Vec3 v = p - origin;
  const double c = std::cos(angle), s = std::sin(angle);
  // Rodrigues
  Vec3 r = v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c));
  return origin + r;
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

}  // namespace pqr
