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

// Synthetic fixtures: drug-like corpora, residue-fragment pockets and planted tasks.

#include <string>
#include <vector>

#include "pqr/molio.hpp"
#include "pqr/recon.hpp"

namespace pqr {

/// Rough 3D coordinates from a distance-geometry relaxation: bonded pairs at
/// 1.5 A, 1-3 pairs at 2.5 A, all other pairs pushed beyond 3 A.
std::vector<Vec3> embed_coordinates(const MolGraph& g, Rng& rng);

/// Random proper rotation.
std::array<Vec3, 3> random_rotation(Rng& rng);
Vec3 apply_rotation(const std::array<Vec3, 3>& r, const Vec3& v);

const std::vector<std::string>& scaffold_smiles();
const std::vector<std::string>& substituent_smiles();
const std::vector<std::string>& residue_smiles();

/// One scaffold with one to three substituents and occasionally a second
/// ring through a methylene linker. `substituent_weights` (optional) biases
/// the substituent choice; its size must match substituent_smiles().
MolGraph random_ligand(Rng& rng, const std::vector<double>* substituent_weights = nullptr);
std::vector<MolGraph> synth_corpus(std::size_t n, Rng& rng, const std::vector<double>* substituent_weights = nullptr);

/// Single-component protein with residue fragments packed around `ligand`
/// (which must carry coordinates). Acyclic single bonds between heavy atoms
/// of degree >= 2 are flagged rotatable.
MolGraph synth_pocket(const MolGraph& ligand, int n_residues, Rng& rng);
/// Joins several protein graphs (with coordinates) into one.
MolGraph merge_graphs(const std::vector<MolGraph>& parts, Role role);

/// Ligand with coordinates and a synthetic pocket.
Complex synth_complex(const MolGraph& ligand, const std::string& id, Rng& rng, int n_residues = 6);

/// Two corpora of the same scaffolds whose substituent frequencies differ.
struct PlantedShift {
  std::vector<MolGraph> a;
  std::vector<MolGraph> b;
  std::vector<double> weights_a;
  std::vector<double> weights_b;
};
PlantedShift planted_shift_corpora(std::size_t n_a, std::size_t n_b, Rng& rng);

/// Benzene carrying substituent A or B (equal odds) at the same position; a
/// single protein marker atom sits 3-4 A from the ring attachment atom when
/// the substituent is A and 5.5-7 A away when it is B.
struct Planted3D {
  std::vector<Complex> complexes;
  std::vector<int> is_a;
  std::string smiles_a, smiles_b;
};
Planted3D planted_3d_task(std::size_t n, Rng& rng);

}  // namespace pqr
