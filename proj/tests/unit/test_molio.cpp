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

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pqr/molio.hpp"

using namespace pqr;

namespace {

std::string data_path(const std::string& name) { return std::string(PQR_TEST_DATA_DIR) + "/" + name; }

int total_h(const MolGraph& g) {
  int h = 0;
  for (const auto& a : g.atoms()) h += a.n_hydrogens;
  return h;
}

MolGraph permuted(const MolGraph& g, Rng& rng) {
  return oracle::permute(g, oracle::random_permutation(g.num_atoms(), rng), rng);
}

}  // namespace

TEST_CASE("methane") {
  const auto g = parse_smiles("C");
  REQUIRE(g.num_atoms() == 1);
  CHECK(g.atom(0).n_hydrogens == 4);
  CHECK(g.atom(0).hybridization == Hybridization::SP3);
  CHECK(write_smiles(g) == "C");
}

TEST_CASE("benzene") {
  const auto g = parse_smiles("c1ccccc1");
  REQUIRE(g.num_atoms() == 6);
  REQUIRE(g.num_bonds() == 6);
  for (const auto& a : g.atoms()) {
    CHECK(a.aromatic);
    CHECK(a.n_hydrogens == 1);
    CHECK(a.hybridization == Hybridization::SP2);
  }
  for (const auto& b : g.bonds()) {
    CHECK(b.order == BondOrder::Aromatic);
    CHECK(b.in_ring);
    CHECK(b.conjugated);
  }
  const auto s = write_smiles(g);
  CHECK(oracle::isomorphic(parse_smiles(s), g));
}

TEST_CASE("acetic acid") {
  const auto g = parse_smiles("CC(=O)O");
  REQUIRE(g.num_atoms() == 4);
  REQUIRE(g.num_bonds() == 3);
  CHECK(g.atom(0).n_hydrogens == 3);
  CHECK(g.atom(1).n_hydrogens == 0);
  CHECK(g.atom(2).n_hydrogens == 0);
  CHECK(g.atom(3).n_hydrogens == 1);
  CHECK(g.bond(g.find_bond(1, 2)).order == BondOrder::Double);
  CHECK(g.bond(g.find_bond(1, 3)).order == BondOrder::Single);
  CHECK(g.bond(g.find_bond(1, 3)).conjugated);
  CHECK_FALSE(g.bond(g.find_bond(0, 1)).conjugated);
}

TEST_CASE("counts agree with frozen toolkit values") {
  std::ifstream in(data_path("corpus100_rdkit.tsv"));
  REQUIRE(in);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string smi, hs;
    std::size_t atoms = 0, bonds = 0, ring = 0;
    std::getline(ss, smi, '\t');
    ss >> atoms >> bonds >> ring >> hs;
    CAPTURE(smi);
    const auto g = parse_smiles(smi);
    CHECK(g.num_atoms() == atoms);
    CHECK(g.num_bonds() == bonds);
    std::size_t n_ring = 0;
    for (const auto& b : g.bonds()) n_ring += b.in_ring;
    CHECK(n_ring == ring);
    std::istringstream hss(hs);
    std::string tok;
    int i = 0;
    while (std::getline(hss, tok, ',')) {
      CHECK(g.atom(i).n_hydrogens == std::stoi(tok));
      ++i;
    }
    ++n;
  }
  CHECK(n == 100);
}

TEST_CASE("round trip on the corpus") {
  const auto lines = read_smiles_lines(data_path("corpus100.smi"));
  REQUIRE(lines.size() == 100);
  Rng rng(7);
  int ok = 0;
  for (const auto& s : lines) {
    CAPTURE(s);
    const auto g = parse_smiles(s);
    const auto w = write_smiles(g);
    CAPTURE(w);
    const auto g2 = parse_smiles(w);
    const bool iso = oracle::isomorphic(g, g2, -1, -1, true);
    CHECK(iso);
    ok += iso;
    // Writing from a permuted copy must also round-trip.
    const auto gp = permuted(g, rng);
    CHECK(oracle::isomorphic(parse_smiles(write_smiles(gp)), g, -1, -1, true));
  }
  CHECK(ok == 100);
}

TEST_CASE("ring perception matches brute-force cycle search") {
  for (const auto& s : read_smiles_lines(data_path("corpus100.smi"))) {
    const auto g = parse_smiles(s);
    if (g.num_atoms() > 30) continue;
    const auto ref = oracle::ring_bonds_brute_force(g);
    for (std::size_t i = 0; i < g.num_bonds(); ++i) CHECK(g.bond(static_cast<int>(i)).in_ring == ref[i]);
  }
}

TEST_CASE("chirality marks") {
  const auto l = parse_smiles("N[C@@H](C)C(=O)O");
  const auto d = parse_smiles("N[C@H](C)C(=O)O");
  CHECK(l.atom(1).chirality != Chirality::None);
  CHECK(d.atom(1).chirality != Chirality::None);
  CHECK(l.atom(1).chirality != d.atom(1).chirality);
  // Same centre written from a different neighbour order.
  const auto l2 = parse_smiles("C[C@H](N)C(=O)O");
  CHECK(l2.atom(1).chirality == l.atom(1).chirality);
  CHECK(parse_smiles("CC").atom(0).chirality == Chirality::None);
}

TEST_CASE("parser errors") {
  CHECK_THROWS_AS(parse_smiles(""), ParseError);
  CHECK_THROWS_AS(parse_smiles("C1CC"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C(C"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C)"), ParseError);
  CHECK_THROWS_AS(parse_smiles("CX"), ParseError);
  CHECK_THROWS_AS(parse_smiles("[Xe]"), ParseError);
  CHECK_THROWS_AS(parse_smiles("C=="), ParseError);
  CHECK_THROWS_AS(parse_smiles("C(=C)(=C)(=C)"), ValenceError);
  CHECK_THROWS_AS(parse_smiles("[CH4]=C"), ValenceError);
  try {
    parse_smiles("CC(C)Q");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 5);
  }
}

TEST_CASE("valence check rejects overfull atoms") {
  std::vector<Atom> atoms(2);
  atoms[0].n_hydrogens = 3;
  atoms[1].n_hydrogens = 2;
  std::vector<Bond> bonds{{0, 1, BondOrder::Double}};
  CHECK_THROWS_AS(MolGraph::build(atoms, bonds), ValenceError);
  atoms[0].n_hydrogens = 2;
  CHECK_NOTHROW(MolGraph::build(atoms, bonds));
}

TEST_CASE("features") {
  using L = AtomFeatureLayout;
  const auto methane = parse_smiles("C");
  const auto f = atom_features(methane, 0);
  CHECK(f.size() == 36);
  CHECK(f[L::element + 0] == 1.0);
  CHECK(f[L::degree + 4] == 1.0);
  CHECK(f[L::hydrogens + 4] == 1.0);
  CHECK(f[L::hybridization + static_cast<std::size_t>(Hybridization::SP3)] == 1.0);

  const auto benzene = parse_smiles("c1ccccc1");
  const auto [af, bf] = featurize(benzene);
  REQUIRE(af.size() == 6);
  REQUIRE(bf.size() == 6);
  for (const auto& row : af) {
    double one_hot = 0;
    for (std::size_t i = 0; i < 12; ++i) one_hot += row[L::element + i];
    for (std::size_t i = 0; i < 7; ++i) one_hot += row[L::degree + i];
    for (std::size_t i = 0; i < 7; ++i) one_hot += row[L::hybridization + i];
    for (std::size_t i = 0; i < 5; ++i) one_hot += row[L::hydrogens + i];
    CHECK(one_hot == 4.0);
    CHECK(row[L::aromatic] == 1.0);
  }
  for (const auto& row : bf) {
    CHECK(row[0] + row[1] + row[2] + row[3] == 1.0);
    CHECK(row[3] == 1.0);
    CHECK(row[5] == 1.0);
  }
}

TEST_CASE("complex loading") {
  const std::string path = "test_molio_complexes.jsonl";
  {
    std::ofstream(path).close();
    CHECK(load_complexes(path).empty());
  }
  {
    std::ofstream out(path);
    out << R"({"id":"c1","family_tag":"famA","ligand":{"atoms":[)"
        << R"({"el":"C","x":0,"y":0,"z":0,"q":0},{"el":"C","x":1.5,"y":0,"z":0,"q":0},)"
        << R"({"el":"O","x":2.2,"y":1.2,"z":0,"q":0},{"el":"N","x":2.2,"y":-1.2,"z":0,"q":0},)"
        << R"({"el":"C","x":-1.5,"y":0,"z":0,"q":0}],"bonds":[[0,1,"single"],[1,2,"double"],[1,3,"single"],[0,4,"single"]]},)"
        << R"("protein":{"atoms":[)";
    for (int i = 0; i < 10; ++i) {
      if (i) out << ",";
      out << R"({"el":"C","x":)" << 5 + i << R"(,"y":3,"z":0,"q":0})";
    }
    out << R"(],"bonds":[[0,1,"single",true]]}})" << "\n";
  }
  const auto cs = load_complexes(path);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].family_tag == "famA");
  CHECK(cs[0].ligand.num_atoms() + cs[0].protein.num_atoms() == 15);
  CHECK(cs[0].ligand.has_coords());
  CHECK(cs[0].ligand.atom(3).n_hydrogens == 2);
  CHECK(cs[0].protein.bond(0).rotatable);
  // Loss-free rewrite.
  const auto again = parse_complex_line(complex_to_json_line(cs[0]));
  CHECK(complex_to_json_line(again) == complex_to_json_line(cs[0]));

  {
    std::ofstream out(path);
    out << "\n" << R"({"id":"bad","ligand":{"atoms":[{"el":"C"}],"bonds":[]}})" << "\n";
  }
  try {
    load_complexes(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << R"({"id":"bad","ligand":{"atoms":[{"el":"C","x":0,"y":0,"z":0}],"bonds":[[0,3,"single"]]}})" << "\n";
  }
  CHECK_THROWS_AS(load_complexes(path), Error);
  std::remove(path.c_str());
}
