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

#include "pqr/synth.hpp"

namespace pqr {

namespace {

std::vector<std::vector<int>> topological_distances(const MolGraph& g, int cap) {
  const std::size_t n = g.num_atoms();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, cap));
  for (std::size_t s = 0; s < n; ++s) {
    d[s][s] = 0;
    std::vector<int> frontier{static_cast<int>(s)};
    for (int depth = 1; depth < cap && !frontier.empty(); ++depth) {
      std::vector<int> next;
      for (int a : frontier)
        for (const auto& nb : g.neighbors(a))
          if (d[s][static_cast<std::size_t>(nb.atom)] == cap) {
            d[s][static_cast<std::size_t>(nb.atom)] = depth;
            next.push_back(nb.atom);
          }
      frontier = std::move(next);
    }
  }
  return d;
}

Vec3 random_unit(Rng& rng) {
  Vec3 v{standard_normal(rng), standard_normal(rng), standard_normal(rng)};
  const double n = v.norm();
  return n > 0 ? v * (1.0 / n) : Vec3{1, 0, 0};
}

Vec3 centroid(const std::vector<Vec3>& xyz) {
  Vec3 c;
  for (const auto& p : xyz) c += p;
  return xyz.empty() ? c : c * (1.0 / static_cast<double>(xyz.size()));
}

MolGraph parse_fragment(const std::string& smi) { return parse_smiles(smi); }

}  // namespace

std::vector<Vec3> embed_coordinates(const MolGraph& g, Rng& rng) {
  const std::size_t n = g.num_atoms();
  std::vector<Vec3> x(n);
  const double box = 1.0 + 0.8 * std::cbrt(static_cast<double>(n));
  for (auto& p : x) p = {uniform_real(rng, -box, box), uniform_real(rng, -box, box), uniform_real(rng, -box, box)};
  if (n < 2) return x;
  const auto topo = topological_distances(g, 3);
  std::vector<Vec3> grad(n);
  for (int it = 0; it < 1500; ++it) {
    std::fill(grad.begin(), grad.end(), Vec3{});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec3 diff = x[i] - x[j];
        const double r = std::max(diff.norm(), 1e-6);
        double target = 0.0, k = 1.0;
        if (topo[i][j] == 1) target = 1.5;
        else if (topo[i][j] == 2) target = 2.5;
        else if (r < 3.0) target = 3.0, k = 0.3;
        else continue;
        const double f = 2.0 * k * (r - target) / r;
        grad[i] += diff * f;
        grad[j] += diff * (-f);
      }
    const double step = it < 1000 ? 0.05 : 0.02;
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 s = grad[i] * step;
      const double sn = s.norm();
      if (sn > 0.3) s = s * (0.3 / sn);
      x[i] = x[i] - s;
    }
  }
  const Vec3 c = centroid(x);
  for (auto& p : x) p = p - c;
  return x;
}

std::array<Vec3, 3> random_rotation(Rng& rng) {
  // uniform unit quaternion
  const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double qw = a * std::sin(2 * M_PI * u2), qx = a * std::cos(2 * M_PI * u2);
  const double qy = b * std::sin(2 * M_PI * u3), qz = b * std::cos(2 * M_PI * u3);
  return {Vec3{1 - 2 * (qy * qy + qz * qz), 2 * (qx * qy - qz * qw), 2 * (qx * qz + qy * qw)},
          Vec3{2 * (qx * qy + qz * qw), 1 - 2 * (qx * qx + qz * qz), 2 * (qy * qz - qx * qw)},
          Vec3{2 * (qx * qz - qy * qw), 2 * (qy * qz + qx * qw), 1 - 2 * (qx * qx + qy * qy)}};
}

Vec3 apply_rotation(const std::array<Vec3, 3>& r, const Vec3& v) { return {r[0].dot(v), r[1].dot(v), r[2].dot(v)}; }

const std::vector<std::string>& scaffold_smiles() {
  static const std::vector<std::string> s{"c1ccccc1", "c1ccncc1", "C1CCNCC1", "C1CCCCC1", "c1ccoc1",
                                          "c1ccsc1",  "c1cnccn1", "C1COCCN1", "c1ccc2ccccc2c1", "c1cc[nH]c1"};
  return s;
}

const std::vector<std::string>& substituent_smiles() {
  static const std::vector<std::string> s{"C", "O", "N", "F", "Cl", "C(=O)O", "C(=O)N", "OC", "C#N", "CC", "NC(C)=O", "S(C)(=O)=O"};
  return s;
}

const std::vector<std::string>& residue_smiles() {
  static const std::vector<std::string> s{
      "CC(N)C(=O)O",          "CC(C)C(N)C(=O)O",       "OCC(N)C(=O)O",        "NC(CC(=O)O)C(=O)O",
      "NCCCCC(N)C(=O)O",      "NC(Cc1ccccc1)C(=O)O",   "NC(Cc1ccc(O)cc1)C(=O)O", "NC(CCC(N)=O)C(=O)O",
      "NC(CO)C(=O)O",         "CC(C)CC(N)C(=O)O"};
  return s;
}

MolGraph random_ligand(Rng& rng, const std::vector<double>* substituent_weights) {
  const auto& scaf = scaffold_smiles();
  const auto& subs = substituent_smiles();
  if (substituent_weights && substituent_weights->size() != subs.size())
    throw Error("substituent weight count mismatch");
  MolGraph g = parse_fragment(scaf[uniform_index(rng, scaf.size())]);
  auto free_sites = [](const MolGraph& m) {
    std::vector<int> s;
    for (std::size_t i = 0; i < m.num_atoms(); ++i)
      if (m.atom(static_cast<int>(i)).n_hydrogens > 0 && m.degree(static_cast<int>(i)) >= 2) s.push_back(static_cast<int>(i));
    return s;
  };
  if (uniform01(rng) < 0.25) {
    // second ring through a CH2 linker
    const auto sites = free_sites(g);
    if (!sites.empty()) {
      Motif linker{parse_fragment("C"), 0};
      const int at = sites[uniform_index(rng, sites.size())];
      g = attach_motif(g, at, linker, BondOrder::Single);
      Motif ring{parse_fragment(scaf[uniform_index(rng, scaf.size())]), 0};
      for (std::size_t i = 0; i < ring.graph.num_atoms(); ++i)
        if (ring.graph.atom(static_cast<int>(i)).n_hydrogens > 0) {
          ring.attachment = static_cast<int>(i);
          break;
        }
      g = attach_motif(g, static_cast<int>(g.num_atoms()) - 1, ring, BondOrder::Single);
    }
  }
  const int n_sub = 1 + static_cast<int>(uniform_index(rng, 3));
  std::vector<double> uniform(subs.size(), 1.0);
  const auto& w = substituent_weights ? *substituent_weights : uniform;
  for (int k = 0; k < n_sub; ++k) {
    const auto sites = free_sites(g);
    if (sites.empty()) break;
    const int at = sites[uniform_index(rng, sites.size())];
    Motif m{parse_fragment(subs[sample_index(w, rng)]), 0};
    g = attach_motif(g, at, m, BondOrder::Single);
  }
  return g;
}

std::vector<MolGraph> synth_corpus(std::size_t n, Rng& rng, const std::vector<double>* substituent_weights) {
  std::vector<MolGraph> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_ligand(rng, substituent_weights));
  return out;
}

MolGraph merge_graphs(const std::vector<MolGraph>& parts, Role role) {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  for (const auto& p : parts) {
    const int off = static_cast<int>(atoms.size());
    atoms.insert(atoms.end(), p.atoms().begin(), p.atoms().end());
    for (auto b : p.bonds()) {
      b.begin += off;
      b.end += off;
      bonds.push_back(b);
    }
  }
  return MolGraph::build(std::move(atoms), std::move(bonds), role);
}

namespace {

MolGraph flag_rotatable(const MolGraph& g) {
  std::vector<Bond> bonds = g.bonds();
  for (auto& b : bonds)
    b.rotatable = b.order == BondOrder::Single && !b.in_ring && g.degree(b.begin) >= 2 && g.degree(b.end) >= 2;
  return MolGraph::build(g.atoms(), bonds, Role::Protein);
}

// Rigidly places `frag` (centred coordinates) so that no atom comes closer
// than `min_lig` to the ligand or `min_prot` to placed protein atoms.
bool place_fragment(const std::vector<Vec3>& frag, const std::vector<Vec3>& lig, const std::vector<Vec3>& prot,
                    double min_lig, double min_prot, Rng& rng, std::vector<Vec3>& out, const Vec3* keep_away = nullptr,
                    double keep_away_r = 0.0) {
  double rad = 0.0;
  for (const auto& p : frag) rad = std::max(rad, p.norm());
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec3 anchor = lig[uniform_index(rng, lig.size())];
    const Vec3 centre = anchor + random_unit(rng) * (min_lig + rad * uniform_real(rng, 0.4, 1.0) + 0.5);
    const auto rot = random_rotation(rng);
    out.clear();
    bool ok = true;
    for (const auto& p : frag) {
      const Vec3 q = centre + apply_rotation(rot, p);
      for (const auto& l : lig)
        if (distance(q, l) < min_lig) ok = false;
      for (const auto& l : prot)
        if (distance(q, l) < min_prot) ok = false;
      if (keep_away && distance(q, *keep_away) < keep_away_r) ok = false;
      if (!ok) break;
      out.push_back(q);
    }
    if (ok) return true;
  }
  return false;
}

MolGraph pocket_around(const MolGraph& ligand, int n_residues, Rng& rng, const Vec3* keep_away, double keep_away_r,
                       std::vector<MolGraph> parts = {}) {
  std::vector<Vec3> lig;
  for (const auto& a : ligand.atoms()) {
    if (!a.coords) throw Error("ligand needs coordinates");
    lig.push_back(*a.coords);
  }
  std::vector<Vec3> prot;
  for (const auto& p : parts)
    for (const auto& a : p.atoms()) prot.push_back(*a.coords);
  const auto& res = residue_smiles();
  for (int r = 0; r < n_residues; ++r) {
    const auto frag = flag_rotatable(parse_fragment(res[uniform_index(rng, res.size())]));
    const auto xyz = embed_coordinates(frag, rng);
    std::vector<Vec3> placed;
    if (!place_fragment(xyz, lig, prot, 3.2, 2.8, rng, placed, keep_away, keep_away_r)) continue;
    prot.insert(prot.end(), placed.begin(), placed.end());
    parts.push_back(frag.with_coords(placed));
  }
  if (parts.empty()) return MolGraph::build({}, {}, Role::Protein);
  return merge_graphs(parts, Role::Protein);
}

}  // namespace

MolGraph synth_pocket(const MolGraph& ligand, int n_residues, Rng& rng) {
  return pocket_around(ligand, n_residues, rng, nullptr, 0.0);
}

Complex synth_complex(const MolGraph& ligand, const std::string& id, Rng& rng, int n_residues) {
  Complex c;
  c.id = id;
  c.ligand = ligand.has_coords() && ligand.num_atoms() > 0 ? ligand : ligand.with_coords(embed_coordinates(ligand, rng));
  c.protein = synth_pocket(c.ligand, n_residues, rng);
  c.family_tag = "fam" + std::to_string(uniform_index(rng, 5));
  return c;
}

PlantedShift planted_shift_corpora(std::size_t n_a, std::size_t n_b, Rng& rng) {
  PlantedShift s;
  const std::size_t k = substituent_smiles().size();
  s.weights_a.assign(k, 1.0);
  s.weights_b.assign(k, 1.0);
  // halogens and nitrile dominate B, small alkyl/hydroxyl dominate A
  for (std::size_t i = 0; i < k; ++i) {
    const auto& smi = substituent_smiles()[i];
    if (smi == "F" || smi == "Cl" || smi == "C#N") {
      s.weights_a[i] = 0.2;
      s.weights_b[i] = 5.0;
    } else if (smi == "C" || smi == "O" || smi == "CC") {
      s.weights_a[i] = 5.0;
      s.weights_b[i] = 0.2;
    }
  }
  s.a = synth_corpus(n_a, rng, &s.weights_a);
  s.b = synth_corpus(n_b, rng, &s.weights_b);
  return s;
}

Planted3D planted_3d_task(std::size_t n, Rng& rng) {
  Planted3D t;
  t.smiles_a = "N";
  t.smiles_b = "O";
  const MolGraph ring = parse_fragment("c1ccccc1");
  for (std::size_t i = 0; i < n; ++i) {
    const bool a = uniform01(rng) < 0.5;
    Motif m{parse_fragment(a ? t.smiles_a : t.smiles_b), 0};
    const MolGraph lig0 = attach_motif(ring, 0, m, BondOrder::Single);
    const auto xyz = embed_coordinates(lig0, rng);
    const MolGraph lig = lig0.with_coords(xyz);
    std::vector<Vec3> lig_xyz = xyz;
    // marker: a lone sulfur at the planted distance from ring atom 0
    const Vec3 anchor = xyz[0];
    std::vector<Vec3> marker;
    for (int attempt = 0; attempt < 500; ++attempt) {
      const double r = a ? uniform_real(rng, 3.0, 4.0) : uniform_real(rng, 5.5, 7.0);
      const Vec3 p = anchor + random_unit(rng) * r;
      bool ok = true;
      for (const auto& l : lig_xyz)
        if (distance(p, l) < 2.8) ok = false;
      if (ok) {
        marker.push_back(p);
        break;
      }
    }
    if (marker.empty()) throw Error("could not place planted marker");
    const MolGraph s = parse_fragment("S").with_coords(marker);
    const std::vector<MolGraph> seed{s.with_role(Role::Protein)};
    Complex c;
    c.id = "planted" + std::to_string(i);
    c.family_tag = a ? "A" : "B";
    c.ligand = lig;
    // decoy residues stay clear of the marker shell around the anchor
    c.protein = pocket_around(lig, 3, rng, &anchor, 4.5, seed);
    t.complexes.push_back(std::move(c));
    t.is_a.push_back(a ? 1 : 0);
  }
  return t;
}

}  // namespace pqr
