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

#include "pqr/recon.hpp"

namespace pqr {

Pathway order_pathway(ShredResult s, Rng& rng) {
  Pathway p;
  const std::size_t n = s.motifs.size();
  p.seed_motif = static_cast<int>(uniform_index(rng, n));
  std::vector<bool> placed(n, false);
  placed[static_cast<std::size_t>(p.seed_motif)] = true;
  for (std::size_t step = 1; step < n; ++step) {
    // Candidate motifs adjacent to the placed set, with the connecting link.
    std::vector<std::pair<int, const MotifLink*>> cand;
    for (const auto& l : s.links) {
      const bool pa = placed[static_cast<std::size_t>(l.motif_a)], pb = placed[static_cast<std::size_t>(l.motif_b)];
      if (pa != pb) cand.push_back({pa ? l.motif_b : l.motif_a, &l});
    }
    if (cand.empty()) break;  // disconnected input: remaining components are not reachable
    std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    const auto& [m, link] = cand[uniform_index(rng, cand.size())];
    const bool new_is_a = link->motif_a == m;
    p.steps.push_back({m, new_is_a ? link->atom_b : link->atom_a, new_is_a ? link->atom_a : link->atom_b, link->order});
    placed[static_cast<std::size_t>(m)] = true;
  }
  p.shredding = std::move(s);
  return p;
}

Pathway sample_pathway(const MolGraph& g, const ShredPolicy& policy, Rng& rng) {
  return order_pathway(shred(g, policy, rng), rng);
}

MolGraph attach_motif(const MolGraph& core, int core_atom, const Motif& motif, BondOrder order,
                      const std::vector<Vec3>* motif_coords) {
  const int need = bond_valence(order);
  if (core_atom < 0 || core_atom >= static_cast<int>(core.num_atoms())) throw Error("growth atom out of range");
  if (core.atom(core_atom).n_hydrogens < need)
    throw ValenceError("growth atom " + std::to_string(core_atom) + " has no free valence");
  if (motif.graph.atom(motif.attachment).n_hydrogens < need)
    throw ValenceError("motif attachment atom has no free valence");
  std::vector<Atom> atoms = core.atoms();
  std::vector<Bond> bonds = core.bonds();
  const int off = static_cast<int>(atoms.size());
  atoms[static_cast<std::size_t>(core_atom)].n_hydrogens -= need;
  for (std::size_t i = 0; i < motif.graph.num_atoms(); ++i) {
    Atom a = motif.graph.atom(static_cast<int>(i));
    if (motif_coords) a.coords = (*motif_coords)[i];
    else a.coords.reset();
    atoms.push_back(a);
  }
  atoms[static_cast<std::size_t>(off + motif.attachment)].n_hydrogens -= need;
  for (auto b : motif.graph.bonds()) {
    b.begin += off;
    b.end += off;
    bonds.push_back(b);
  }
  Bond link;
  link.begin = core_atom;
  link.end = off + motif.attachment;
  link.order = order;
  bonds.push_back(link);
  if (!motif_coords)
    for (auto& a : atoms) a.coords.reset();
  return MolGraph::build(std::move(atoms), std::move(bonds), core.role());
}

MolGraph replay_pathway(const MolGraph& g, const Pathway& p) {
  const auto& s = p.shredding;
  // Seed: a standalone capped copy of the seed motif.
  const auto& seed_atoms = s.motifs[static_cast<std::size_t>(p.seed_motif)];
  Subgraph seed = induced_subgraph(g, seed_atoms, Role::Ligand);
  MolGraph cur = seed.graph;
  std::vector<int> parent_to_cur(g.num_atoms(), -1);
  for (std::size_t i = 0; i < seed.to_parent.size(); ++i)
    parent_to_cur[static_cast<std::size_t>(seed.to_parent[i])] = static_cast<int>(i);
  for (const auto& st : p.steps) {
    const auto& atoms = s.motifs[static_cast<std::size_t>(st.motif)];
    Subgraph sub = induced_subgraph(g, atoms, Role::Motif);
    const Motif m{sub.graph, sub.from_parent[static_cast<std::size_t>(st.motif_atom)]};
    const int off = static_cast<int>(cur.num_atoms());
    cur = attach_motif(cur, parent_to_cur[static_cast<std::size_t>(st.core_atom)], m, st.order);
    for (std::size_t i = 0; i < sub.to_parent.size(); ++i)
      parent_to_cur[static_cast<std::size_t>(sub.to_parent[i])] = off + static_cast<int>(i);
  }
  return cur;
}

std::vector<ReconstructionStep> steps_from_pathway(const Pathway& p, const MolGraph& g, const Vocabulary& vocab,
                                                   std::size_t* n_unknown) {
  std::vector<ReconstructionStep> out;
  const auto& s = p.shredding;
  std::vector<int> placed = s.motifs[static_cast<std::size_t>(p.seed_motif)];
  for (const auto& st : p.steps) {
    const auto& atoms = s.motifs[static_cast<std::size_t>(st.motif)];
    const Motif m = make_motif(g, atoms, st.motif_atom);
    const std::string key = canonical_key(m);
    const auto idx = vocab.find(key);
    if (idx) {
      ReconstructionStep r;
      Subgraph core = induced_subgraph(g, placed, Role::Ligand);
      r.core = std::move(core.graph);
      r.growth_atom = core.from_parent[static_cast<std::size_t>(st.core_atom)];
      r.true_motif = key;
      r.true_index = *idx;
      r.true_bond_order = st.order;
      r.core_to_parent = std::move(core.to_parent);
      r.motif_parent_atoms = atoms;
      out.push_back(std::move(r));
    } else if (n_unknown) {
      ++*n_unknown;
    }
    placed.insert(placed.end(), atoms.begin(), atoms.end());
  }
  return out;
}

std::vector<std::size_t> sample_negatives_from(std::span<const double> weights, std::size_t truth, int k, Rng& rng) {
  if (k < 1) throw Error("number of negatives must be >= 1");
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(k));
  // Cumulative table once; draws are inverse-transform lookups.
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cdf[i] = acc += std::max(0.0, weights[i]);
  if (!(acc > 0.0)) return {};
  for (int j = 0; j < k; ++j) {
    int attempts = 0;
    for (;;) {
      if (++attempts > kMaxRejections) return {};
      const double u = uniform01(rng) * acc;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      std::size_t i = it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
      if (i != truth) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> sample_negatives(const ReconstructionStep& step, const BaselineModel& baseline, int k,
                                          Rng& rng) {
  const auto w = baseline.weights(step);
  if (step.true_index >= w.size()) throw Error("baseline/vocabulary mismatch");
  return sample_negatives_from(w, step.true_index, k, rng);
}

std::vector<std::string> negative_keys(const ReconstructionStep& step, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (auto i : step.negatives) out.push_back(vocab.entry(i).key);
  return out;
}

}  // namespace pqr
