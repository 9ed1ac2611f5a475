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
#include <map>
#include <numeric>

#include "pqr/molio.hpp"

namespace pqr {

namespace {

// Slots: C N O S F Cl Br I P B Si other
constexpr ElementInfo kElements[] = {
    {"B", 5, {3, 0, 0}, true, 9},    {"C", 6, {4, 0, 0}, true, 0},
    {"N", 7, {3, 5, 0}, true, 1},    {"O", 8, {2, 0, 0}, true, 2},
    {"F", 9, {1, 0, 0}, true, 4},    {"Si", 14, {4, 0, 0}, false, 10},
    {"P", 15, {3, 5, 0}, true, 8},   {"S", 16, {2, 4, 6}, true, 3},
    {"Cl", 17, {1, 0, 0}, true, 5},  {"Se", 34, {2, 4, 6}, false, 11},
    {"Br", 35, {1, 0, 0}, true, 6},  {"I", 53, {1, 0, 0}, true, 7},
    {"Li", 3, {1, 0, 0}, false, 11}, {"Na", 11, {1, 0, 0}, false, 11},
    {"Mg", 12, {2, 0, 0}, false, 11}, {"K", 19, {1, 0, 0}, false, 11},
    {"Ca", 20, {2, 0, 0}, false, 11}, {"Mn", 25, {2, 0, 0}, false, 11},
    {"Fe", 26, {2, 3, 0}, false, 11}, {"Cu", 29, {1, 2, 0}, false, 11},
    {"Zn", 30, {2, 0, 0}, false, 11},
};

bool is_metal(int z) { return z == 3 || z == 11 || z == 12 || z == 19 || z == 20 || (z >= 25 && z <= 30); }
bool is_group15(int z) { return z == 7 || z == 15; }
bool is_group16(int z) { return z == 8 || z == 16 || z == 34; }

int max_of(const std::array<int, 3>& v) { return *std::max_element(v.begin(), v.end()); }

// Valence bookkeeping shared by the parser (H unknown) and the checker.
struct ValenceInputs {
  int atomic_number;
  bool aromatic;
  int n_aromatic_bonds;
  int other_bond_sum;
  int heavy_degree;
  int n_hydrogens;
  bool exocyclic_double;
};

int used_valence(const ValenceInputs& in) {
  int used = in.other_bond_sum + in.n_aromatic_bonds;
  if (in.n_aromatic_bonds == 0) return used;
  bool donor = false;
  if (is_group16(in.atomic_number)) {
    donor = true;
  } else if (is_group15(in.atomic_number)) {
    donor = (in.heavy_degree + in.n_hydrogens) >= 3;
  } else if (in.atomic_number == 6) {
    donor = in.exocyclic_double;
  }
  return donor ? used : used + 1;
}

ValenceInputs valence_inputs(const MolGraph& g, int atom) {
  ValenceInputs in{g.atom(atom).atomic_number, g.atom(atom).aromatic, 0, 0, g.degree(atom),
                   g.atom(atom).n_hydrogens, false};
  for (const auto& nb : g.neighbors(atom)) {
    const auto& b = g.bond(nb.bond);
    if (b.order == BondOrder::Aromatic) {
      ++in.n_aromatic_bonds;
    } else {
      in.other_bond_sum += bond_valence(b.order);
      if (b.order == BondOrder::Double) in.exocyclic_double = true;
    }
  }
  return in;
}

// Tarjan bridge finding; returns per-bond "is bridge" flags.
std::vector<bool> find_bridges(std::size_t n_atoms, const std::vector<Bond>& bonds) {
  std::vector<std::vector<std::pair<int, int>>> adj(n_atoms);
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    adj[static_cast<std::size_t>(bonds[i].begin)].push_back({bonds[i].end, static_cast<int>(i)});
    adj[static_cast<std::size_t>(bonds[i].end)].push_back({bonds[i].begin, static_cast<int>(i)});
  }
  std::vector<int> disc(n_atoms, -1), low(n_atoms, 0);
  std::vector<bool> bridge(bonds.size(), false);
  int timer = 0;
  struct Frame {
    int v;
    int parent_bond;
    std::size_t next;
  };
  for (std::size_t s = 0; s < n_atoms; ++s) {
    if (disc[s] >= 0) continue;
    std::vector<Frame> stack{{static_cast<int>(s), -1, 0}};
    disc[s] = low[s] = timer++;
    while (!stack.empty()) {
      auto& f = stack.back();
      const auto v = static_cast<std::size_t>(f.v);
      if (f.next < adj[v].size()) {
        auto [w, bi] = adj[v][f.next++];
        if (bi == f.parent_bond) continue;
        const auto wu = static_cast<std::size_t>(w);
        if (disc[wu] < 0) {
          disc[wu] = low[wu] = timer++;
          stack.push_back({w, bi, 0});
        } else {
          low[v] = std::min(low[v], disc[wu]);
        }
      } else {
        const int pb = f.parent_bond;
        stack.pop_back();
        if (!stack.empty()) {
          const auto p = static_cast<std::size_t>(stack.back().v);
          low[p] = std::min(low[p], low[v]);
          if (low[v] > disc[p]) bridge[static_cast<std::size_t>(pb)] = true;
        }
      }
    }
  }
  return bridge;
}

bool is_pi(BondOrder o) { return o != BondOrder::Single; }

}  // namespace

const ElementInfo* find_element(std::string_view symbol) {
  for (const auto& e : kElements)
    if (e.symbol == symbol) return &e;
  return nullptr;
}

const ElementInfo& element_info(int atomic_number) {
  for (const auto& e : kElements)
    if (e.atomic_number == atomic_number) return e;
  throw Error("unsupported element with atomic number " + std::to_string(atomic_number));
}

std::string_view element_symbol(int atomic_number) { return element_info(atomic_number).symbol; }

int bond_valence(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

int allowed_max_valence(int z, int charge) {
  const int base = max_of(element_info(z).valences);
  if (charge == 0) return base;
  if (charge > 0 && (is_group15(z) || is_group16(z))) return base + charge;
  if (charge < 0 && z == 5) return base - charge;
  return std::max(0, base - std::abs(charge));
}

int implicit_hydrogens(int z, int charge, int used) {
  const auto& info = element_info(z);
  if (is_metal(z)) return 0;
  if (charge != 0) {
    const int target = allowed_max_valence(z, charge);
    if (used > target) throw ValenceError("valence exceeded for " + std::string(info.symbol));
    // Charged group 15/16 atoms take their lowest valence shifted by the charge.
    int lowest = info.valences[0];
    if (charge > 0 && (is_group15(z) || is_group16(z))) lowest += charge;
    else if (charge < 0 && z == 5) lowest -= charge;
    else lowest = std::max(0, lowest - std::abs(charge));
    return used <= lowest ? lowest - used : 0;
  }
  for (int v : info.valences) {
    if (v == 0) break;
    if (v >= used) return v - used;
  }
  throw ValenceError("valence exceeded for " + std::string(info.symbol));
}

int valence_used(const MolGraph& g, int atom) { return used_valence(valence_inputs(g, atom)); }

void check_valence(const MolGraph& g) {
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i) {
    const auto& a = g.atom(i);
    if (a.n_hydrogens < 0) throw ValenceError("negative hydrogen count on atom " + std::to_string(i));
    const int total = valence_used(g, i) + a.n_hydrogens;
    if (total > allowed_max_valence(a.atomic_number, a.formal_charge))
      throw ValenceError("valence violation on atom " + std::to_string(i) + " (" +
                         std::string(element_symbol(a.atomic_number)) + ", total " +
                         std::to_string(total) + ")");
  }
}

MolGraph MolGraph::build(std::vector<Atom> atoms, std::vector<Bond> bonds, Role role) {
  MolGraph g;
  g.atoms_ = std::move(atoms);
  g.bonds_ = std::move(bonds);
  g.role_ = role;
  const int n = static_cast<int>(g.atoms_.size());
  for (auto& b : g.bonds_) {
    if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n)
      throw Error("bond index out of range");
    if (b.begin == b.end) throw Error("bond endpoints must be distinct");
  }
  for (const auto& a : g.atoms_) (void)element_info(a.atomic_number);
  g.index();

  const auto bridges = find_bridges(g.atoms_.size(), g.bonds_);
  for (std::size_t i = 0; i < g.bonds_.size(); ++i) g.bonds_[i].in_ring = !bridges[i];

  // Conjugation: pi bonds next to other pi systems, single bonds joining two
  // unsaturated atoms or an unsaturated atom and a lone-pair heteroatom.
  std::vector<bool> unsat(g.atoms_.size(), false);
  for (const auto& b : g.bonds_)
    if (is_pi(b.order)) unsat[static_cast<std::size_t>(b.begin)] = unsat[static_cast<std::size_t>(b.end)] = true;
  auto lone_pair = [&](int i) {
    const int z = g.atoms_[static_cast<std::size_t>(i)].atomic_number;
    return !unsat[static_cast<std::size_t>(i)] && (z == 7 || z == 8 || z == 16);
  };
  std::vector<bool> conj_single(g.bonds_.size(), false);
  for (std::size_t i = 0; i < g.bonds_.size(); ++i) {
    const auto& b = g.bonds_[i];
    if (b.order != BondOrder::Single) continue;
    const bool ub = unsat[static_cast<std::size_t>(b.begin)], ue = unsat[static_cast<std::size_t>(b.end)];
    conj_single[i] = (ub && ue) || (ub && lone_pair(b.end)) || (ue && lone_pair(b.begin));
  }
  for (std::size_t i = 0; i < g.bonds_.size(); ++i) {
    auto& b = g.bonds_[i];
    if (b.order == BondOrder::Aromatic) {
      b.conjugated = true;
    } else if (b.order == BondOrder::Single) {
      b.conjugated = conj_single[i];
    } else {
      bool c = false;
      for (int end : {b.begin, b.end})
        for (const auto& nb : g.neighbors(end))
          if (static_cast<std::size_t>(nb.bond) != i && conj_single[static_cast<std::size_t>(nb.bond)]) c = true;
      b.conjugated = c;
    }
  }

  for (int i = 0; i < n; ++i) {
    auto& a = g.atoms_[static_cast<std::size_t>(i)];
    int n_double = 0, n_triple = 0;
    bool arom_bond = false;
    for (const auto& nb : g.neighbors(i)) {
      const auto o = g.bonds_[static_cast<std::size_t>(nb.bond)].order;
      if (o == BondOrder::Double) ++n_double;
      if (o == BondOrder::Triple) ++n_triple;
      if (o == BondOrder::Aromatic) arom_bond = true;
    }
    const int steric = g.degree(i) + a.n_hydrogens;
    if (a.aromatic || arom_bond) a.hybridization = Hybridization::SP2;
    else if (n_triple > 0 || n_double >= 2) a.hybridization = Hybridization::SP;
    else if (n_double == 1) a.hybridization = Hybridization::SP2;
    else if (steric == 0) a.hybridization = Hybridization::S;
    else if (steric <= 4) a.hybridization = Hybridization::SP3;
    else if (steric == 5) a.hybridization = Hybridization::SP3D;
    else if (steric == 6) a.hybridization = Hybridization::SP3D2;
    else a.hybridization = Hybridization::Other;
  }

  check_valence(g);
  return g;
}

void MolGraph::index() {
  const std::size_t n = atoms_.size();
  std::vector<std::size_t> count(n, 0);
  for (const auto& b : bonds_) {
    ++count[static_cast<std::size_t>(b.begin)];
    ++count[static_cast<std::size_t>(b.end)];
  }
  adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) adj_offsets_[i + 1] = adj_offsets_[i] + count[i];
  adj_.assign(adj_offsets_[n], Neighbor{0, 0});
  std::vector<std::size_t> fill(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const auto& b = bonds_[i];
    adj_[fill[static_cast<std::size_t>(b.begin)]++] = {b.end, static_cast<int>(i)};
    adj_[fill[static_cast<std::size_t>(b.end)]++] = {b.begin, static_cast<int>(i)};
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adj_.begin() + static_cast<std::ptrdiff_t>(adj_offsets_[i]),
              adj_.begin() + static_cast<std::ptrdiff_t>(adj_offsets_[i + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.atom < b.atom; });
}

int MolGraph::find_bond(int a, int b) const {
  for (const auto& nb : neighbors(a))
    if (nb.atom == b) return nb.bond;
  return -1;
}

bool MolGraph::has_coords() const {
  if (atoms_.empty()) return false;
  return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.coords.has_value(); });
}

MolGraph MolGraph::with_coords(std::span<const Vec3> coords) const {
  if (coords.size() != atoms_.size()) throw std::invalid_argument("coordinate count mismatch");
  MolGraph g = *this;
  for (std::size_t i = 0; i < coords.size(); ++i) g.atoms_[i].coords = coords[i];
  return g;
}

MolGraph MolGraph::with_role(Role role) const {
  MolGraph g = *this;
  g.role_ = role;
  return g;
}

std::uint64_t atom_invariant(const MolGraph& g, int i, bool with_chirality) {
  const auto& a = g.atom(i);
  std::uint64_t h = hash_combine(0x5151, static_cast<std::uint64_t>(a.atomic_number));
  h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 16));
  h = hash_combine(h, static_cast<std::uint64_t>(a.n_hydrogens));
  h = hash_combine(h, a.aromatic ? 1u : 0u);
  h = hash_combine(h, static_cast<std::uint64_t>(g.degree(i)));
  h = hash_combine(h, static_cast<std::uint64_t>(a.n_radical));
  if (with_chirality) h = hash_combine(h, static_cast<std::uint64_t>(a.chirality));
  return h;
}

std::vector<std::uint64_t> refine_colors(const MolGraph& g, std::vector<std::uint64_t> colors) {
  const std::size_t n = g.num_atoms();
  auto count_classes = [](const std::vector<std::uint64_t>& c) {
    std::vector<std::uint64_t> s(c);
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
  };
  std::size_t classes = count_classes(colors);
  for (std::size_t iter = 0; iter <= n; ++iter) {
    std::vector<std::uint64_t> next(n);
    std::vector<std::uint64_t> nb;
    for (std::size_t i = 0; i < n; ++i) {
      nb.clear();
      for (const auto& x : g.neighbors(static_cast<int>(i)))
        nb.push_back(hash_combine(static_cast<std::uint64_t>(g.bond(x.bond).order),
                                  colors[static_cast<std::size_t>(x.atom)]));
      std::sort(nb.begin(), nb.end());
      std::uint64_t h = hash_combine(0xc0102, colors[i]);
      for (auto v : nb) h = hash_combine(h, v);
      next[i] = h;
    }
    const std::size_t nc = count_classes(next);
    colors.swap(next);
    if (nc == classes) break;
    classes = nc;
  }
  return colors;
}

Subgraph induced_subgraph(const MolGraph& g, std::span<const int> subset, Role role) {
  Subgraph out;
  out.from_parent.assign(g.num_atoms(), -1);
  std::vector<Atom> atoms;
  for (int p : subset) {
    if (out.from_parent[static_cast<std::size_t>(p)] >= 0) continue;
    out.from_parent[static_cast<std::size_t>(p)] = static_cast<int>(atoms.size());
    out.to_parent.push_back(p);
    atoms.push_back(g.atom(p));
  }
  std::vector<Bond> bonds;
  for (const auto& b : g.bonds()) {
    const int sb = out.from_parent[static_cast<std::size_t>(b.begin)];
    const int se = out.from_parent[static_cast<std::size_t>(b.end)];
    if (sb >= 0 && se >= 0) {
      Bond nb = b;
      nb.begin = sb;
      nb.end = se;
      bonds.push_back(nb);
    } else if (sb >= 0) {
      atoms[static_cast<std::size_t>(sb)].n_hydrogens += bond_valence(b.order);
    } else if (se >= 0) {
      atoms[static_cast<std::size_t>(se)].n_hydrogens += bond_valence(b.order);
    }
  }
  for (auto& a : atoms)
    if (a.n_hydrogens >= 2) a.chirality = Chirality::None;
  out.graph = MolGraph::build(std::move(atoms), std::move(bonds), role);
  return out;
}

std::vector<int> connected_components(const MolGraph& g, int* n_components) {
  std::vector<int> comp(g.num_atoms(), -1);
  int c = 0;
  for (std::size_t s = 0; s < g.num_atoms(); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{static_cast<int>(s)};
    comp[s] = c;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& nb : g.neighbors(v))
        if (comp[static_cast<std::size_t>(nb.atom)] < 0) {
          comp[static_cast<std::size_t>(nb.atom)] = c;
          stack.push_back(nb.atom);
        }
    }
    ++c;
  }
  if (n_components) *n_components = c;
  return comp;
}

AtomFeatures atom_features(const MolGraph& g, int i) {
  using L = AtomFeatureLayout;
  AtomFeatures f{};
  const auto& a = g.atom(i);
  f[L::element + static_cast<std::size_t>(element_info(a.atomic_number).feature_slot)] = 1.0;
  f[L::degree + static_cast<std::size_t>(std::min(6, g.degree(i) + a.n_hydrogens))] = 1.0;
  f[L::radical] = a.n_radical;
  f[L::charge] = a.formal_charge;
  f[L::hybridization + static_cast<std::size_t>(a.hybridization)] = 1.0;
  f[L::aromatic] = a.aromatic ? 1.0 : 0.0;
  f[L::hydrogens + static_cast<std::size_t>(std::min(4, a.n_hydrogens))] = 1.0;
  if (a.chirality == Chirality::R) f[L::chirality] = 1.0;
  if (a.chirality == Chirality::S) f[L::chirality + 1] = 1.0;
  return f;
}

BondFeatures bond_features(const Bond& b) {
  BondFeatures f{};
  f[static_cast<std::size_t>(b.order) - 1] = 1.0;
  f[4] = b.conjugated ? 1.0 : 0.0;
  f[5] = b.in_ring ? 1.0 : 0.0;
  return f;
}

std::pair<std::vector<AtomFeatures>, std::vector<BondFeatures>> featurize(const MolGraph& g) {
  std::vector<AtomFeatures> af;
  af.reserve(g.num_atoms());
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i) af.push_back(atom_features(g, i));
  std::vector<BondFeatures> bf;
  bf.reserve(g.num_bonds());
  for (const auto& b : g.bonds()) bf.push_back(bond_features(b));
  return {std::move(af), std::move(bf)};
}

std::string_view bond_order_name(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return "single";
    case BondOrder::Double: return "double";
    case BondOrder::Triple: return "triple";
    case BondOrder::Aromatic: return "aromatic";
  }
  return "single";
}

BondOrder parse_bond_order(std::string_view s) {
  if (s == "single" || s == "1" || s == "-") return BondOrder::Single;
  if (s == "double" || s == "2" || s == "=") return BondOrder::Double;
  if (s == "triple" || s == "3" || s == "#") return BondOrder::Triple;
  if (s == "aromatic" || s == "ar" || s == ":" || s == "1.5") return BondOrder::Aromatic;
  throw Error("unknown bond order '" + std::string(s) + "'");
}

}  // namespace pqr
