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

#pragma once

// Coordinate augmentation: coloured noise and side-chain torsion jitter.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "pqr/molio.hpp"

namespace pqr {

struct NoiseConfig {
  double sigma = 0.5;          // target per-component std, Angstrom
  double clamp = 2.0;          // max displacement norm in units of sigma
  int smoothing_iters = 5;
  double torsion_range = 10.0; // degrees
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static NoiseConfig from_json(const nlohmann::json& j);
};

/// All coordinates of `g`; throws if any atom lacks them.
std::vector<Vec3> coordinates(const MolGraph& g);

/// One smoothing pass: each vector becomes the mean of itself and its
/// covalent neighbours.
std::vector<Vec3> smooth_on_graph(const MolGraph& g, const std::vector<Vec3>& v);

/// Displacements only: white noise, smoothed, rescaled so that the std of
/// each Cartesian component over the atoms is sigma, then clamped in norm.
/// A single atom has no spread to measure and is scaled by sigma directly.
std::vector<Vec3> colored_displacements(const MolGraph& g, const NoiseConfig& cfg, Rng& rng);

/// Displaced coordinates.
std::vector<Vec3> colored_noise(const MolGraph& g, const NoiseConfig& cfg, Rng& rng);

/// Atoms on the `end` side of bond `bond` once it is cut, or empty when the
/// bond is in a ring.
std::vector<int> side_of_bond(const MolGraph& g, int bond, int end);

/// Bonds eligible for torsion jitter: flagged rotatable, single, acyclic.
std::vector<int> rotatable_bonds(const MolGraph& g);

/// Rotates the smaller side of `bond` by `angle` radians about the bond axis.
std::vector<Vec3> rotate_torsion(const MolGraph& g, const std::vector<Vec3>& xyz, int bond, double angle);

/// Uniform jitter in [-torsion_range, torsion_range] for every rotatable bond.
std::vector<Vec3> torsion_jitter(const MolGraph& g, const NoiseConfig& cfg, Rng& rng);

/// Training-time perturbation of a complex: torsion jitter on the protein,
/// then coloured noise on both partners.
Complex augment_complex(const Complex& c, const NoiseConfig& cfg, Rng& rng);

}  // namespace pqr
