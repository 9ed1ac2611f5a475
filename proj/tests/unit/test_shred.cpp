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

#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "pqr/shred.hpp"

using namespace pqr;

namespace {

std::string data_path(const std::string& name) { return std::string(PQR_TEST_DATA_DIR) + "/" + name; }

std::vector<MolGraph> corpus() { return read_smiles_corpus(data_path("corpus100.smi")); }

// Brute-force audit of one shredding.
void audit(const MolGraph& g, const ShredResult& s) {
  std::vector<int> seen(g.num_atoms(), 0);
  for (const auto& m : s.motifs)
    for (int a : m) ++seen[static_cast<std::size_t>(a)];
  for (int c : seen) CHECK(c == 1);
  std::set<std::pair<int, int>> cut;
  for (const auto& b : g.bonds())
    if (s.motif_of[static_cast<std::size_t>(b.begin)] != s.motif_of[static_cast<std::size_t>(b.end)])
      cut.insert({std::min(b.begin, b.end), std::max(b.begin, b.end)});
  std::set<std::pair<int, int>> linked;
  for (const auto& l : s.links) {
    CHECK(s.motif_of[static_cast<std::size_t>(l.atom_a)] == l.motif_a);
    CHECK(s.motif_of[static_cast<std::size_t>(l.atom_b)] == l.motif_b);
    CHECK(g.bond(g.find_bond(l.atom_a, l.atom_b)).order == l.order);
    linked.insert({std::min(l.atom_a, l.atom_b), std::max(l.atom_a, l.atom_b)});
  }
  CHECK(cut == linked);
  // Ring systems are never split; non-ring atoms never share a motif with a
  // ring atom unless they are exocyclic oxygens.
  for (const auto& b : g.bonds()) {
    if (b.in_ring) CHECK(s.motif_of[static_cast<std::size_t>(b.begin)] == s.motif_of[static_cast<std::size_t>(b.end)]);
  }
}

}  // namespace

TEST_CASE("benzene is a single motif") {
  const auto g = parse_smiles("c1ccccc1");
  const auto s = shred(g, ShredPolicy{});
  CHECK(s.motifs.size() == 1);
  CHECK(s.links.empty());
}

TEST_CASE("toluene splits into ring and methyl") {
  const auto g = parse_smiles("Cc1ccccc1");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ShredPolicy p;
    p.rng_seed = seed;
    const auto s = shred(g, p);
    REQUIRE(s.motifs.size() == 2);
    REQUIRE(s.links.size() == 1);
  }
}

TEST_CASE("exocyclic oxygen stays with its ring") {
  const auto g = parse_smiles("O=C1CCCCC1C");
  const auto s = shred(g, ShredPolicy{});
  REQUIRE(s.motifs.size() == 2);
  CHECK(s.motif_of[0] == s.motif_of[1]);
}

TEST_CASE("single atom molecule") {
  const auto s = shred(parse_smiles("C"), ShredPolicy{});
  CHECK(s.motifs.size() == 1);
}

TEST_CASE("partition and adjacency audit on the corpus") {
  const auto mols = corpus();
  for (std::size_t i = 0; i < 50; ++i) {
    ShredPolicy p;
    p.rng_seed = 100 + i;
    audit(mols[i], shred(mols[i], p));
  }
}

TEST_CASE("shredding is reproducible and stochastic") {
  const auto g = parse_smiles("CCCCCCCCCC");
  ShredPolicy p;
  p.rng_seed = 42;
  CHECK(shred(g, p).motifs == shred(g, p).motifs);
  std::set<std::vector<std::vector<int>>> partitions;
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) partitions.insert(shred(g, p, rng).motifs);
  CHECK(partitions.size() >= 2);
}

TEST_CASE("radius zero gives single atoms") {
  ShredPolicy p;
  p.max_radius = 0;
  const auto s = shred(parse_smiles("CCOCC"), p);
  CHECK(s.motifs.size() == 5);
  CHECK(s.links.size() == 4);
}

TEST_CASE("policy validation and fingerprint") {
  ShredPolicy p;
  p.max_radius = -1;
  CHECK_THROWS_AS(p.validate(), Error);
  p.max_radius = 2;
  p.directional_prob = 1.5;
  CHECK_THROWS_AS(p.validate(), Error);
  ShredPolicy a, b;
  b.rng_seed = 99;
  CHECK(a.fingerprint() == b.fingerprint());
  b.max_radius = 3;
  CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("oversized ring systems are rejected") {
  // 22-atom fused polycycle
  CHECK_THROWS_AS(shred(parse_smiles("c1ccc2cc3cc4cc5cc6cc7cc8ccccc8cc7cc6cc5cc4cc3cc2c1"), ShredPolicy{}),
                  ShredError);
}

TEST_CASE("canonical key basics") {
  const auto methane = parse_smiles("C");
  CHECK(canonical_key(methane, 0) == canonical_key(Motif{methane, 0}));
  const auto pyr = parse_smiles("c1ccncc1");
  // atom 3 is N; atoms 2/4 are ortho (2-position), 1/5 meta (3-position)
  CHECK(canonical_key(pyr, 2) == canonical_key(pyr, 4));
  CHECK(canonical_key(pyr, 1) == canonical_key(pyr, 5));
  CHECK(canonical_key(pyr, 2) != canonical_key(pyr, 1));
  CHECK(canonical_key(pyr, 0) != canonical_key(pyr, 1));
  const auto benz = parse_smiles("c1ccccc1");
  std::set<std::string> keys;
  for (int i = 0; i < 6; ++i) keys.insert(canonical_key(benz, i));
  CHECK(keys.size() == 1);
}

TEST_CASE("canonical key is permutation invariant") {
  Rng rng(3);
  const auto mols = corpus();
  for (const auto& g : mols) {
    if (g.num_atoms() > 20) continue;
    int att = -1;
    for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i)
      if (has_open_valence(g, i)) {
        att = i;
        break;
      }
    if (att < 0) continue;
    const auto key = canonical_key(g, att);
    for (int k = 0; k < 100; ++k) {
      const auto perm = oracle::random_permutation(g.num_atoms(), rng);
      const auto pg = oracle::permute(g, perm, rng);
      CHECK(canonical_key(pg, perm[static_cast<std::size_t>(att)]) == key);
    }
  }
}

TEST_CASE("key equality iff rooted isomorphism") {
  // Motif pool: shredded pieces of the corpus plus small whole molecules,
  // each with every open-valence atom as attachment.
  std::vector<Motif> pool;
  const auto mols = corpus();
  Rng rng(11);
  for (std::size_t i = 0; i < mols.size(); ++i) {
    const auto& g = mols[i];
    const auto s = shred(g, ShredPolicy{}, rng);
    for (const auto& l : s.links) {
      pool.push_back(make_motif(g, s.motifs[static_cast<std::size_t>(l.motif_a)], l.atom_a));
      pool.push_back(make_motif(g, s.motifs[static_cast<std::size_t>(l.motif_b)], l.atom_b));
    }
    if (g.num_atoms() <= 12)
      for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a)
        if (has_open_valence(g, a)) pool.push_back(Motif{g, a});
  }
  std::erase_if(pool, [](const Motif& m) { return m.graph.num_atoms() > 12; });
  REQUIRE(pool.size() > 100);
  std::vector<std::string> keys;
  for (const auto& m : pool) keys.push_back(canonical_key(m));
  int equal_pairs = 0, tested = 0;
  auto check_pair = [&](std::size_t i, std::size_t j) {
    const bool iso = oracle::isomorphic(pool[i].graph, pool[j].graph, pool[i].attachment, pool[j].attachment, true);
    CHECK((keys[i] == keys[j]) == iso);
    equal_pairs += iso;
    ++tested;
  };
  for (int k = 0; k < 500; ++k) check_pair(uniform_index(rng, pool.size()), uniform_index(rng, pool.size()));
  // Same-size pairs are the interesting ones; test them exhaustively.
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      if (pool[i].graph.num_atoms() == pool[j].graph.num_atoms() && pool[i].graph.num_bonds() == pool[j].graph.num_bonds())
        check_pair(i, j);
  CHECK(equal_pairs > 0);
  MESSAGE("pairs tested: " << tested << ", isomorphic: " << equal_pairs);
}

TEST_CASE("vocabulary counting") {
  {
    const std::vector<MolGraph> c{parse_smiles("C")};
    const auto v = build_vocabulary(c, ShredPolicy{}, 1);
    REQUIRE(v.size() == 1);
    CHECK(v.p1d(0) == 1.0);
    CHECK(v.entry(0).smiles == "C");
  }
  {
    const std::vector<MolGraph> c{parse_smiles("Cc1ccccc1")};
    const auto v = build_vocabulary(c, ShredPolicy{}, 1);
    REQUIRE(v.size() == 2);
    CHECK(v.entry(0).count == 1);
    CHECK(v.entry(1).count == 1);
    CHECK(v.p1d(0) == 0.5);
    CHECK(v.p1d(1) == 0.5);
    CHECK(v.find(canonical_key(parse_smiles("C"), 0)).has_value());
    CHECK(v.find(canonical_key(parse_smiles("c1ccccc1"), 0)).has_value());
  }
  CHECK_THROWS_AS(build_vocabulary(std::vector<MolGraph>{}, ShredPolicy{}, 1), Error);
}

TEST_CASE("vocabulary invariants, parallel build and serialization") {
  const auto mols = corpus();
  ShredPolicy p;
  p.rng_seed = 5;
  const auto v1 = build_vocabulary(mols, p, 4, 1);
  const auto v3 = build_vocabulary(mols, p, 4, 3);
  CHECK(v1.hash() == v3.hash());
  CHECK(v1.to_json() == v3.to_json());
  std::int64_t sum = 0;
  double psum = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    CHECK(v1.entry(i).count >= 1);
    if (i > 0) CHECK(v1.entry(i).count <= v1.entry(i - 1).count);
    sum += v1.entry(i).count;
    psum += v1.p1d(i);
    CHECK(has_open_valence(v1.entry(i).motif.graph, v1.entry(i).motif.attachment));
    CHECK(canonical_key(v1.entry(i).motif) == v1.entry(i).key);
  }
  CHECK(sum == v1.total());
  CHECK(std::fabs(psum - 1.0) < 1e-12);
  const auto back = Vocabulary::from_json(v1.to_json());
  CHECK(back.to_json() == v1.to_json());
  CHECK(back.hash() == v1.hash());

  nlohmann::json bad = v1.to_json();
  bad["total"] = v1.total() + 1;
  CHECK_THROWS_AS(Vocabulary::from_json(bad), Error);
}

TEST_CASE("sample_1d") {
  {
    const std::vector<MolGraph> c{parse_smiles("C")};
    const auto v = build_vocabulary(c, ShredPolicy{}, 1);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) CHECK(sample_1d(v, rng) == 0);
  }
  {
    const std::vector<MolGraph> c{parse_smiles("Cc1ccccc1")};
    const auto v = build_vocabulary(c, ShredPolicy{}, 1);
    Rng rng(2);
    const int n = 10000;
    int zero = 0;
    for (int i = 0; i < n; ++i) zero += sample_1d(v, rng) == 0;
    const double sd = std::sqrt(n * 0.25);
    CHECK(std::fabs(zero - n * 0.5) < 5 * sd);
  }
  {
    const auto v = build_vocabulary(corpus(), ShredPolicy{}, 4);
    Rng rng(3);
    std::vector<double> obs(v.size(), 0.0);
    for (int i = 0; i < 100000; ++i) obs[sample_1d(v, rng)] += 1.0;
    const auto [stat, dof] = oracle::pearson_chi2(obs, v.probabilities());
    CHECK(oracle::chi2_sf(stat, dof) > 0.01);
  }
}

TEST_CASE("vocabulary shift") {
  const std::vector<MolGraph> a{parse_smiles("Fc1ccccc1"), parse_smiles("Fc1ccccc1"), parse_smiles("Fc1ccccc1"),
                                parse_smiles("Fc1ccccc1"), parse_smiles("Brc1ccccc1")};
  const std::vector<MolGraph> b{parse_smiles("Fc1ccccc1"), parse_smiles("Brc1ccccc1"), parse_smiles("Brc1ccccc1"),
                                parse_smiles("Brc1ccccc1"), parse_smiles("Brc1ccccc1")};
  const auto va = build_vocabulary(a, ShredPolicy{}, 1);
  const auto vb = build_vocabulary(b, ShredPolicy{}, 1);
  for (const auto& r : vocabulary_shift(va, va)) CHECK(r.ratio == doctest::Approx(1.0));
  const auto rows = vocabulary_shift(va, vb);
  const auto fkey = canonical_key(parse_smiles("F"), 0);
  for (const auto& r : rows)
    if (r.key == fkey) CHECK(r.ratio == doctest::Approx(4.0));
  CHECK(significant_shifts(rows).size() == 2);

  const std::vector<MolGraph> c{parse_smiles("C")};
  const std::vector<MolGraph> d{parse_smiles("O")};
  for (const auto& r : vocabulary_shift(build_vocabulary(c, ShredPolicy{}, 1), build_vocabulary(d, ShredPolicy{}, 1)))
    CHECK((r.ratio == 0.0 || std::isinf(r.ratio)));
}
