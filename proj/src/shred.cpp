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
#include <fstream>
#include <functional>
#include <map>
#include <thread>

#include "pqr/shred.hpp"

namespace pqr {

using nlohmann::json;

void ShredPolicy::validate() const {
  if (max_radius < 0) throw Error("shred policy: max_radius must be >= 0");
  if (!(directional_prob >= 0.0 && directional_prob <= 1.0))
    throw Error("shred policy: directional_prob must lie in [0, 1]");
}

std::string ShredPolicy::fingerprint() const {
  std::uint64_t h = fnv1a("shred-v1");
  h = hash_combine(h, static_cast<std::uint64_t>(max_radius));
  h = hash_combine(h, static_cast<std::uint64_t>(directional_prob * 1e9));
  h = hash_combine(h, kMaxMotifAtoms);
  return to_hex(h);
}

nlohmann::json ShredPolicy::to_json() const {
  return {{"rng_seed", rng_seed}, {"max_radius", max_radius}, {"directional_prob", directional_prob}};
}

ShredPolicy ShredPolicy::from_json(const nlohmann::json& j) {
  ShredPolicy p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "rng_seed") p.rng_seed = it->get<std::uint64_t>();
    else if (k == "max_radius") p.max_radius = it->get<int>();
    else if (k == "directional_prob") p.directional_prob = it->get<double>();
    else throw Error("unknown shred option '" + k + "'");
  }
  p.validate();
  return p;
}

// ---- shredding --------------------------------------------------------------

namespace {

bool is_exocyclic_oxo(const MolGraph& g, int ring_atom, const Neighbor& nb) {
  const auto& b = g.bond(nb.bond);
  return b.order == BondOrder::Double && !b.in_ring && g.atom(nb.atom).atomic_number == 8 &&
         g.degree(nb.atom) == 1 && g.degree(ring_atom) > 1;
}

double seed_weight(const MolGraph& g, int i) {
  int w = g.degree(i);
  for (const auto& nb : g.neighbors(i)) w += bond_valence(g.bond(nb.bond).order);
  return w;
}

}  // namespace

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (weights.empty()) throw Error("sample_index: no weights");
  if (!(total > 0.0)) return uniform_index(rng, weights.size());
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // u landed on the rounding tail; return the last positive weight
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

ShredResult shred(const MolGraph& g, const ShredPolicy& policy, Rng& rng) {
  policy.validate();
  const int n = static_cast<int>(g.num_atoms());
  ShredResult out;
  out.motif_of.assign(static_cast<std::size_t>(n), -1);
  auto& motif_of = out.motif_of;

  auto close_motif = [&](std::vector<int> atoms) {
    if (atoms.size() > kMaxMotifAtoms)
      throw ShredError("motif with " + std::to_string(atoms.size()) + " atoms exceeds the size cap");
    std::sort(atoms.begin(), atoms.end());
    const int id = static_cast<int>(out.motifs.size());
    for (int a : atoms) motif_of[static_cast<std::size_t>(a)] = id;
    out.motifs.push_back(std::move(atoms));
  };

  std::vector<bool> ring_atom(static_cast<std::size_t>(n), false);
  for (const auto& b : g.bonds())
    if (b.in_ring) ring_atom[static_cast<std::size_t>(b.begin)] = ring_atom[static_cast<std::size_t>(b.end)] = true;

  // Fused ring systems with their exocyclic =O.
  for (int s = 0; s < n; ++s) {
    if (!ring_atom[static_cast<std::size_t>(s)] || motif_of[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<int> sys{s};
    std::vector<bool> in(static_cast<std::size_t>(n), false);
    in[static_cast<std::size_t>(s)] = true;
    for (std::size_t h = 0; h < sys.size(); ++h)
      for (const auto& nb : g.neighbors(sys[h]))
        if (g.bond(nb.bond).in_ring && !in[static_cast<std::size_t>(nb.atom)]) {
          in[static_cast<std::size_t>(nb.atom)] = true;
          sys.push_back(nb.atom);
        }
    const std::size_t n_ring = sys.size();
    for (std::size_t h = 0; h < n_ring; ++h)
      for (const auto& nb : g.neighbors(sys[h]))
        if (is_exocyclic_oxo(g, sys[h], nb) && !in[static_cast<std::size_t>(nb.atom)]) {
          in[static_cast<std::size_t>(nb.atom)] = true;
          sys.push_back(nb.atom);
        }
    close_motif(std::move(sys));
  }

  // Chains: weighted seed, random radius, directional or isotropic growth.
  for (;;) {
    std::vector<int> open;
    for (int i = 0; i < n; ++i)
      if (motif_of[static_cast<std::size_t>(i)] < 0) open.push_back(i);
    if (open.empty()) break;
    std::vector<double> w;
    w.reserve(open.size());
    for (int i : open) w.push_back(seed_weight(g, i));
    const int seed = open[sample_index(w, rng)];
    const int radius = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(policy.max_radius) + 1));
    const bool directional = uniform01(rng) < policy.directional_prob;

    std::vector<bool> grown(static_cast<std::size_t>(n), false);
    grown[static_cast<std::size_t>(seed)] = true;
    std::vector<int> motif{seed};
    std::vector<int> shell;
    if (radius > 0) {
      std::vector<int> first;
      for (const auto& nb : g.neighbors(seed))
        if (motif_of[static_cast<std::size_t>(nb.atom)] < 0) first.push_back(nb.atom);
      if (directional && !first.empty()) first = {first[uniform_index(rng, first.size())]};
      for (int a : first) grown[static_cast<std::size_t>(a)] = true;
      shell = first;
      motif.insert(motif.end(), first.begin(), first.end());
    }
    for (int r = 2; r <= radius && !shell.empty(); ++r) {
      std::vector<int> next;
      for (int u : shell)
        for (const auto& nb : g.neighbors(u)) {
          const auto v = static_cast<std::size_t>(nb.atom);
          if (motif_of[v] >= 0 || grown[v]) continue;
          grown[v] = true;
          next.push_back(nb.atom);
        }
      motif.insert(motif.end(), next.begin(), next.end());
      shell.swap(next);
    }
    close_motif(std::move(motif));
  }

  for (const auto& b : g.bonds()) {
    const int ma = motif_of[static_cast<std::size_t>(b.begin)];
    const int mb = motif_of[static_cast<std::size_t>(b.end)];
    if (ma != mb) out.links.push_back({ma, mb, b.begin, b.end, b.order});
  }
  return out;
}

ShredResult shred(const MolGraph& g, const ShredPolicy& policy) {
  Rng rng(policy.rng_seed);
  return shred(g, policy, rng);
}

Motif make_motif(const MolGraph& g, std::span<const int> atoms, int attachment_parent) {
  Subgraph sub = induced_subgraph(g, atoms, Role::Motif);
  const int att = sub.from_parent[static_cast<std::size_t>(attachment_parent)];
  if (att < 0) throw Error("attachment atom is not part of the motif");
  return Motif{std::move(sub.graph), att};
}

// ---- canonical form ---------------------------------------------------------

namespace {

using Serial = std::vector<std::int64_t>;

Serial serialize(const MolGraph& g, int attachment, const std::vector<int>& order) {
  const std::size_t n = order.size();
  std::vector<int> pos(n);
  for (std::size_t p = 0; p < n; ++p) pos[static_cast<std::size_t>(order[p])] = static_cast<int>(p);
  Serial s;
  s.reserve(2 + n * 7 + g.num_bonds() * 3);
  s.push_back(static_cast<std::int64_t>(n));
  for (int i : order) {
    const auto& a = g.atom(i);
    s.insert(s.end(), {a.atomic_number, a.formal_charge, a.n_hydrogens, a.aromatic ? 1 : 0, a.n_radical,
                       static_cast<std::int64_t>(a.chirality), i == attachment ? 1 : 0});
  }
  std::vector<std::array<std::int64_t, 3>> edges;
  for (const auto& b : g.bonds()) {
    auto x = pos[static_cast<std::size_t>(b.begin)], y = pos[static_cast<std::size_t>(b.end)];
    if (x > y) std::swap(x, y);
    edges.push_back({x, y, static_cast<std::int64_t>(b.order)});
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& e : edges) s.insert(s.end(), e.begin(), e.end());
  return s;
}

class Canonicalizer {
 public:
  Canonicalizer(const MolGraph& g, int attachment) : g_(g), att_(attachment) {}

  std::vector<int> run() {
    const std::size_t n = g_.num_atoms();
    std::vector<std::uint64_t> init(n);
    for (std::size_t i = 0; i < n; ++i)
      init[i] = hash_combine(atom_invariant(g_, static_cast<int>(i), true),
                             static_cast<int>(i) == att_ ? 0xa77ac4 : 0x0);
    search(refine_colors(g_, std::move(init)));
    return best_order_;
  }

 private:
  void search(const std::vector<std::uint64_t>& colors) {
    std::map<std::uint64_t, std::vector<int>> cells;
    for (std::size_t i = 0; i < colors.size(); ++i) cells[colors[i]].push_back(static_cast<int>(i));
    const std::vector<int>* target = nullptr;
    for (const auto& [c, members] : cells)
      if (members.size() > 1 && (!target || members.size() < target->size())) target = &members;
    if (!target) {
      std::vector<int> order;
      for (const auto& [c, members] : cells) order.push_back(members[0]);
      Serial s = serialize(g_, att_, order);
      if (best_.empty() || s < best_) {
        best_ = std::move(s);
        best_order_ = std::move(order);
      }
      return;
    }
    const std::vector<int> members = *target;
    for (int v : members) {
      auto next = colors;
      next[static_cast<std::size_t>(v)] = hash_combine(next[static_cast<std::size_t>(v)], 0x1d1d1d);
      search(refine_colors(g_, std::move(next)));
    }
  }

  const MolGraph& g_;
  int att_;
  Serial best_;
  std::vector<int> best_order_;
};

std::string serial_key(const Serial& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (auto v : s) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return to_hex(h);
}

std::string canonical_smiles(const MolGraph& g, int attachment) {
  const auto order = canonical_order(g, attachment);
  std::vector<int> pos(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) pos[static_cast<std::size_t>(order[p])] = static_cast<int>(p);
  std::vector<Atom> atoms(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) atoms[p] = g.atom(order[p]);
  std::vector<Bond> bonds = g.bonds();
  for (auto& b : bonds) {
    b.begin = pos[static_cast<std::size_t>(b.begin)];
    b.end = pos[static_cast<std::size_t>(b.end)];
  }
  const MolGraph relabelled = MolGraph::build(std::move(atoms), std::move(bonds), g.role());
  return write_smiles(relabelled, attachment >= 0 ? pos[static_cast<std::size_t>(attachment)] : 0);
}

}  // namespace

std::vector<int> canonical_order(const MolGraph& g, int attachment) {
  if (g.num_atoms() == 0) return {};
  return Canonicalizer(g, attachment).run();
}

std::string canonical_key(const MolGraph& g, int attachment) {
  return serial_key(serialize(g, attachment, canonical_order(g, attachment)));
}

std::string canonical_key(const Motif& m) { return canonical_key(m.graph, m.attachment); }

// ---- vocabulary -------------------------------------------------------------

void Vocabulary::add(const std::string& key, const Motif& motif, std::int64_t count) {
  if (count < 1) throw Error("vocabulary counts must be >= 1");
  total_ += count;
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].count += count;
    return;
  }
  VocabEntry e;
  e.key = key;
  e.smiles = canonical_smiles(motif.graph, motif.attachment);
  // The exemplar is the parse of the canonical string, so in-memory and
  // reloaded vocabularies hold identical graphs.
  e.motif = Motif{parse_smiles(e.smiles).with_role(Role::Motif), 0};
  e.count = count;
  index_[key] = entries_.size();
  entries_.push_back(std::move(e));
}

void Vocabulary::merge(const Vocabulary& other) {
  for (const auto& e : other.entries_) {
    total_ += e.count;
    if (auto it = index_.find(e.key); it != index_.end()) {
      entries_[it->second].count += e.count;
    } else {
      index_[e.key] = entries_.size();
      entries_.push_back(e);
    }
  }
}

void Vocabulary::finalize() {
  std::sort(entries_.begin(), entries_.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_[entries_[i].key] = i;
}

std::optional<std::size_t> Vocabulary::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index_of(const std::string& key) const {
  auto i = find(key);
  if (!i) throw Error("unknown motif key '" + key + "'");
  return *i;
}

std::vector<double> Vocabulary::probabilities() const {
  std::vector<double> p(entries_.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = p1d(i);
  return p;
}

std::string Vocabulary::hash() const {
  std::uint64_t h = fnv1a("vocab-v1");
  for (const auto& e : entries_) {
    h = fnv1a(e.key, h);
    h = hash_combine(h, static_cast<std::uint64_t>(e.count));
  }
  return to_hex(h);
}

json Vocabulary::to_json() const {
  json entries = json::array();
  for (const auto& e : entries_)
    entries.push_back({{"key", e.key}, {"smiles", e.smiles}, {"attachment", e.motif.attachment}, {"count", e.count}});
  return json{{"total", total_}, {"entries", entries}};
}

Vocabulary Vocabulary::from_json(const json& j) {
  Vocabulary v;
  for (const auto& je : j.at("entries")) {
    VocabEntry e;
    e.key = je.at("key").get<std::string>();
    e.smiles = je.at("smiles").get<std::string>();
    e.count = je.at("count").get<std::int64_t>();
    e.motif = Motif{parse_smiles(e.smiles).with_role(Role::Motif), je.at("attachment").get<int>()};
    if (e.count < 1) throw Error("vocabulary entry " + e.key + " has count < 1");
    if (canonical_key(e.motif) != e.key) throw Error("vocabulary entry " + e.key + " does not match its SMILES");
    v.index_[e.key] = v.entries_.size();
    v.total_ += e.count;
    v.entries_.push_back(std::move(e));
  }
  if (j.contains("total") && j.at("total").get<std::int64_t>() != v.total_)
    throw Error("vocabulary total does not equal the sum of counts");
  v.finalize();
  return v;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary '" + path + "'");
  out << to_json().dump(1) << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary '" + path + "'");
  return from_json(json::parse(in));
}

void count_shred(const MolGraph& g, const ShredResult& s, Vocabulary& v) {
  std::vector<bool> linked(s.motifs.size(), false);
  for (const auto& l : s.links) {
    linked[static_cast<std::size_t>(l.motif_a)] = linked[static_cast<std::size_t>(l.motif_b)] = true;
    const Motif ma = make_motif(g, s.motifs[static_cast<std::size_t>(l.motif_a)], l.atom_a);
    const Motif mb = make_motif(g, s.motifs[static_cast<std::size_t>(l.motif_b)], l.atom_b);
    v.add(canonical_key(ma), ma);
    v.add(canonical_key(mb), mb);
  }
  for (std::size_t m = 0; m < s.motifs.size(); ++m) {
    if (linked[m]) continue;
    const Subgraph sub = induced_subgraph(g, s.motifs[m], Role::Motif);
    for (int i : canonical_order(sub.graph, -1)) {
      if (!has_open_valence(sub.graph, i)) continue;
      const Motif motif{sub.graph, i};
      v.add(canonical_key(motif), motif);
      break;
    }
  }
}

Vocabulary build_vocabulary(std::span<const MolGraph> corpus, const ShredPolicy& policy, int n_shreds_per_mol,
                            int workers) {
  if (corpus.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  if (n_shreds_per_mol < 1) throw Error("n_shreds_per_mol must be >= 1");
  policy.validate();
  workers = std::max(1, std::min<int>(workers, static_cast<int>(corpus.size())));
  std::vector<Vocabulary> shards(static_cast<std::size_t>(workers));
  std::vector<std::string> errors(static_cast<std::size_t>(workers));
  auto run = [&](int w) {
    const std::size_t lo = corpus.size() * static_cast<std::size_t>(w) / static_cast<std::size_t>(workers);
    const std::size_t hi = corpus.size() * static_cast<std::size_t>(w + 1) / static_cast<std::size_t>(workers);
    try {
      for (std::size_t i = lo; i < hi; ++i)
        for (int pass = 0; pass < n_shreds_per_mol; ++pass) {
          Rng rng(derive_seed(policy.rng_seed, i * static_cast<std::size_t>(n_shreds_per_mol) +
                                                   static_cast<std::size_t>(pass)));
          count_shred(corpus[i], shred(corpus[i], policy, rng), shards[static_cast<std::size_t>(w)]);
        }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(w)] = e.what();
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  Vocabulary v;
  for (const auto& s : shards) v.merge(s);
  v.finalize();
  if (v.empty()) throw Error("corpus produced no motifs with an open valence");
  return v;
}

std::size_t sample_1d(const Vocabulary& v, Rng& rng) {
  if (v.empty()) throw Error("sample_1d: empty vocabulary");
  const double u = uniform01(rng) * static_cast<double>(v.total());
  std::int64_t acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += v.entry(i).count;
    if (u < static_cast<double>(acc)) return i;
  }
  return v.size() - 1;
}

std::vector<ShiftRow> vocabulary_shift(const Vocabulary& va, const Vocabulary& vb) {
  if (va.empty() || vb.empty()) throw Error("vocabulary_shift: empty vocabulary");
  std::vector<ShiftRow> rows;
  auto push = [&](const VocabEntry& e) {
    ShiftRow r;
    r.key = e.key;
    r.smiles = e.smiles;
    if (auto i = va.find(e.key)) r.p_a = va.p1d(*i);
    if (auto i = vb.find(e.key)) r.p_b = vb.p1d(*i);
    r.ratio = r.p_b > 0.0 ? r.p_a / r.p_b : std::numeric_limits<double>::infinity();
    rows.push_back(std::move(r));
  };
  for (const auto& e : va.entries()) push(e);
  for (const auto& e : vb.entries())
    if (!va.find(e.key)) push(e);
  return rows;
}

std::vector<ShiftRow> significant_shifts(std::span<const ShiftRow> rows, double min_p, double ratio_cut) {
  std::vector<ShiftRow> out;
  for (const auto& r : rows)
    if (std::max(r.p_a, r.p_b) > min_p && (r.ratio > ratio_cut || r.ratio < 1.0 / ratio_cut)) out.push_back(r);
  return out;
}

}  // namespace pqr
