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

#include <algorithm>
#include <cmath>

#include "pqr/augment.hpp"

namespace pqr {

using nlohmann::json;

void NoiseConfig::validate() const {
  if (!(sigma > 0.0)) throw Error("noise sigma must be > 0");
  if (!(clamp > 0.0)) throw Error("noise clamp must be > 0");
  if (smoothing_iters < 0) throw Error("smoothing_iters must be >= 0");
  if (!(torsion_range >= 0.0 && torsion_range <= 180.0)) throw Error("torsion_range must be in [0, 180]");
}

json NoiseConfig::to_json() const {
  return {{"sigma", sigma}, {"clamp", clamp}, {"smoothing_iters", smoothing_iters},
          {"torsion_range", torsion_range}, {"seed", seed}};
}

NoiseConfig NoiseConfig::from_json(const json& j) {
  NoiseConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "sigma") c.sigma = it->get<double>();
    else if (k == "clamp") c.clamp = it->get<double>();
    else if (k == "smoothing_iters") c.smoothing_iters = it->get<int>();
    else if (k == "torsion_range") c.torsion_range = it->get<double>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else throw Error("unknown noise option '" + k + "'");
  }
  c.validate();
  return c;
}

std::vector<Vec3> coordinates(const MolGraph& g) {
  std::vector<Vec3> out;
  out.reserve(g.num_atoms());
  for (const auto& a : g.atoms()) {
    if (!a.coords) throw Error("molecule has atoms without coordinates");
    out.push_back(*a.coords);
  }
  return out;
}

std::vector<Vec3> smooth_on_graph(const MolGraph& g, const std::vector<Vec3>& v) {
  std::vector<Vec3> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    Vec3 s = v[i];
    for (const auto& nb : g.neighbors(static_cast<int>(i))) s += v[static_cast<std::size_t>(nb.atom)];
    out[i] = s * (1.0 / (1.0 + g.degree(static_cast<int>(i))));
  }
  return out;
}

std::vector<Vec3> colored_displacements(const MolGraph& g, const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t n = g.num_atoms();
  std::vector<Vec3> d(n);
  for (auto& v : d) v = {standard_normal(rng), standard_normal(rng), standard_normal(rng)};
  for (int it = 0; it < cfg.smoothing_iters; ++it) d = smooth_on_graph(g, d);
  if (n == 1) {
    d[0] = d[0] * cfg.sigma;
  } else if (n > 1) {
    auto at = [](Vec3& v, int c) -> double& { return c == 0 ? v.x : c == 1 ? v.y : v.z; };
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0, var = 0.0;
      for (auto& v : d) mean += at(v, c);
      mean /= static_cast<double>(n);
      for (auto& v : d) var += (at(v, c) - mean) * (at(v, c) - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      if (sd == 0.0) continue;
      for (auto& v : d) at(v, c) *= cfg.sigma / sd;
    }
  }
  const double cap = cfg.clamp * cfg.sigma;
  for (auto& v : d) {
    const double r = v.norm();
    if (r > cap) v = v * (cap / r);
  }
  return d;
}

std::vector<Vec3> colored_noise(const MolGraph& g, const NoiseConfig& cfg, Rng& rng) {
  auto xyz = coordinates(g);
  const auto d = colored_displacements(g, cfg, rng);
  for (std::size_t i = 0; i < xyz.size(); ++i) xyz[i] += d[i];
  return xyz;
}

std::vector<int> side_of_bond(const MolGraph& g, int bond, int end) {
  const auto& b = g.bond(bond);
  const int start = end == 0 ? b.begin : b.end;
  const int other = b.other(start);
  std::vector<char> seen(g.num_atoms(), 0);
  std::vector<int> stack{start}, out;
  seen[static_cast<std::size_t>(start)] = 1;
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    out.push_back(a);
    for (const auto& nb : g.neighbors(a)) {
      if (nb.bond == bond) continue;
      if (nb.atom == other) return {};  // ring
      if (!seen[static_cast<std::size_t>(nb.atom)]) {
        seen[static_cast<std::size_t>(nb.atom)] = 1;
        stack.push_back(nb.atom);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> rotatable_bonds(const MolGraph& g) {
  std::vector<int> out;
  for (std::size_t i = 0; i < g.num_bonds(); ++i) {
    const auto& b = g.bond(static_cast<int>(i));
    if (b.rotatable && b.order == BondOrder::Single && !b.in_ring) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<Vec3> rotate_torsion(const MolGraph& g, const std::vector<Vec3>& xyz, int bond, double angle) {
  auto s0 = side_of_bond(g, bond, 0);
  auto s1 = side_of_bond(g, bond, 1);
  if (s0.empty() || s1.empty()) return xyz;
  const auto& b = g.bond(bond);
  // pivot on the atom of the side that stays put
  const bool move0 = s0.size() < s1.size();
  const auto& moving = move0 ? s0 : s1;
  const int fixed_atom = move0 ? b.end : b.begin;
  const int moving_atom = move0 ? b.begin : b.end;
  const Vec3 origin = xyz[static_cast<std::size_t>(fixed_atom)];
  const Vec3 axis = xyz[static_cast<std::size_t>(moving_atom)] - origin;
  if (axis.norm() == 0.0) return xyz;
  auto out = xyz;
  for (int a : moving) out[static_cast<std::size_t>(a)] = rotate_about_axis(xyz[static_cast<std::size_t>(a)], origin, axis, angle);
  return out;
}

std::vector<Vec3> torsion_jitter(const MolGraph& g, const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  auto xyz = coordinates(g);
  const double range = cfg.torsion_range * M_PI / 180.0;
  for (int b : rotatable_bonds(g)) xyz = rotate_torsion(g, xyz, b, uniform_real(rng, -range, range));
  return xyz;
}

Complex augment_complex(const Complex& c, const NoiseConfig& cfg, Rng& rng) {
  Complex out = c;
  if (c.protein.num_atoms() > 0) {
    const auto jit = c.protein.with_coords(torsion_jitter(c.protein, cfg, rng));
    out.protein = jit.with_coords(colored_noise(jit, cfg, rng));
  }
  if (c.ligand.num_atoms() > 0) out.ligand = c.ligand.with_coords(colored_noise(c.ligand, cfg, rng));
  return out;
}

}  // namespace pqr
