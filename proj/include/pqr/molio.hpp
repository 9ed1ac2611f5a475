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

// Molecular graphs: atoms, bonds, SMILES subset I/O, perception, featurization
// and the JSON-lines complex format.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pqr/common.hpp"

namespace pqr {

enum class Hybridization : std::uint8_t { S, SP, SP2, SP3, SP3D, SP3D2, Other };
enum class Chirality : std::uint8_t { None, R, S };
enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };
enum class Role : std::uint8_t { Ligand, Protein, Motif };

struct Atom {
  int atomic_number = 6;
  int formal_charge = 0;
  int n_radical = 0;
  Hybridization hybridization = Hybridization::SP3;
  bool aromatic = false;
  int n_hydrogens = 0;
  Chirality chirality = Chirality::None;
  std::optional<Vec3> coords;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  bool conjugated = false;
  bool in_ring = false;
  bool rotatable = false;  // only meaningful for protein side chains

  int other(int atom) const { return atom == begin ? end : begin; }
};

struct Neighbor {
  int atom;
  int bond;
};

/// Immutable attributed molecular graph. Construct through MolGraph::build,
/// which runs ring/conjugation/hybridization perception and valence checks.
class MolGraph {
 public:
  MolGraph() = default;

  /// Runs perception and validation. Derived bond/atom fields (in_ring,
  /// conjugated, hybridization) are recomputed; chirality is kept.
  static MolGraph build(std::vector<Atom> atoms, std::vector<Bond> bonds, Role role = Role::Ligand);

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  std::size_t num_atoms() const { return atoms_.size(); }
  std::size_t num_bonds() const { return bonds_.size(); }
  Role role() const { return role_; }

  std::span<const Neighbor> neighbors(int i) const {
    const auto b = adj_offsets_[static_cast<std::size_t>(i)];
    const auto e = adj_offsets_[static_cast<std::size_t>(i) + 1];
    return {adj_.data() + b, e - b};
  }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  /// Bond index between a and b, or -1.
  int find_bond(int a, int b) const;
  bool has_coords() const;

  /// Copy with replaced coordinates (size must match).
  MolGraph with_coords(std::span<const Vec3> coords) const;
  MolGraph with_role(Role role) const;

 private:
  void index();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  Role role_ = Role::Ligand;
  std::vector<Neighbor> adj_;
  std::vector<std::size_t> adj_offsets_{0};
};

// ---- element table ------------------------------------------------------

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  std::array<int, 3> valences;  // ascending, 0-terminated
  bool organic;                 // allowed outside brackets
  int feature_slot;             // index into the 12-way one-hot
};

constexpr int kNumElementSlots = 12;

const ElementInfo* find_element(std::string_view symbol);
const ElementInfo& element_info(int atomic_number);
std::string_view element_symbol(int atomic_number);

/// Bond-order sum used for valence: single=1, double=2, triple=3; aromatic
/// bonds count 1 each plus one extra pi bond for atoms that are not lone-pair
/// donors.
int valence_used(const MolGraph& g, int atom);
int bond_valence(BondOrder order);
/// Maximum total valence (bonds + H) for an atom given its charge.
int allowed_max_valence(int atomic_number, int charge);
/// Implicit hydrogens for an organic-subset atom with `used` bond valence.
int implicit_hydrogens(int atomic_number, int charge, int used);
/// Atom can accept one more single bond (has a replaceable hydrogen).
inline bool has_open_valence(const MolGraph& g, int atom) { return g.atom(atom).n_hydrogens >= 1; }
/// Throws ValenceError if any atom exceeds its maximum valence.
void check_valence(const MolGraph& g);

// ---- SMILES -------------------------------------------------------------

MolGraph parse_smiles(std::string_view text);

/// Writes a SMILES string. DFS starts at `root`; if `order` is non-null it
/// receives the output atom order (position -> original atom index).
std::string write_smiles(const MolGraph& g, int root = 0, std::vector<int>* order = nullptr);

/// Reads a corpus: one SMILES per line, '#' comments and blank lines skipped.
std::vector<MolGraph> read_smiles_corpus(const std::string& path);
std::vector<std::string> read_smiles_lines(const std::string& path);

// ---- graph utilities ----------------------------------------------------

/// Iterative colour refinement (Weisfeiler-Lehman) starting from `initial`
/// colours. Returns a stable colouring that is invariant under atom
/// permutation.
std::vector<std::uint64_t> refine_colors(const MolGraph& g, std::vector<std::uint64_t> initial);
/// Per-atom invariant (element, charge, H, aromatic, degree, radical, chirality).
std::uint64_t atom_invariant(const MolGraph& g, int atom, bool with_chirality = true);

struct Subgraph {
  MolGraph graph;
  std::vector<int> to_parent;   // sub index -> parent index
  std::vector<int> from_parent; // parent index -> sub index or -1
};

/// Induced subgraph. Bonds leaving the subset are replaced by hydrogens on the
/// retained endpoint (caps), so the result is a valid standalone molecule.
Subgraph induced_subgraph(const MolGraph& g, std::span<const int> atoms, Role role);

std::vector<int> connected_components(const MolGraph& g, int* n_components = nullptr);

// ---- features -----------------------------------------------------------

constexpr std::size_t kAtomFeatureDim = 36;
constexpr std::size_t kBondFeatureDim = 6;

using AtomFeatures = std::array<double, kAtomFeatureDim>;
using BondFeatures = std::array<double, kBondFeatureDim>;

/// Offsets of the atom feature blocks.
struct AtomFeatureLayout {
  static constexpr std::size_t element = 0;        // 12
  static constexpr std::size_t degree = 12;        // 7
  static constexpr std::size_t radical = 19;       // 1
  static constexpr std::size_t charge = 20;        // 1
  static constexpr std::size_t hybridization = 21; // 7
  static constexpr std::size_t aromatic = 28;      // 1
  static constexpr std::size_t hydrogens = 29;     // 5
  static constexpr std::size_t chirality = 34;     // 2
};

AtomFeatures atom_features(const MolGraph& g, int atom);
BondFeatures bond_features(const Bond& b);
std::pair<std::vector<AtomFeatures>, std::vector<BondFeatures>> featurize(const MolGraph& g);

// ---- complexes ----------------------------------------------------------

struct Complex {
  std::string id;
  std::string family_tag;
  MolGraph ligand;
  MolGraph protein;
};

/// Validates coordinates, roles and index ranges. Throws Error.
void validate_complex(const Complex& c);

Complex parse_complex_line(std::string_view line, std::size_t line_number = 0);
std::vector<Complex> load_complexes(const std::string& path);
std::string complex_to_json_line(const Complex& c);
void write_complexes(const std::string& path, std::span<const Complex> complexes);

std::string_view bond_order_name(BondOrder order);
BondOrder parse_bond_order(std::string_view name);

}  // namespace pqr
