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

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pqr/molio.hpp"

namespace pqr {

using nlohmann::json;

namespace {

MolGraph parse_side(const json& j, Role role, const std::string& where) {
  if (!j.is_object() || !j.contains("atoms")) throw Error(where + ": missing \"atoms\"");
  std::vector<Atom> atoms;
  for (const auto& ja : j.at("atoms")) {
    const std::string el = ja.at("el").get<std::string>();
    const ElementInfo* info = find_element(el);
    if (!info) throw Error(where + ": unsupported element '" + el + "'");
    if (!ja.contains("x") || !ja.contains("y") || !ja.contains("z"))
      throw Error(where + ": atom " + std::to_string(atoms.size()) + " has no coordinates");
    Atom a;
    a.atomic_number = info->atomic_number;
    a.formal_charge = ja.value("q", 0);
    a.coords = Vec3{ja.at("x").get<double>(), ja.at("y").get<double>(), ja.at("z").get<double>()};
    a.n_hydrogens = ja.value("h", -1);
    atoms.push_back(a);
  }
  std::vector<Bond> bonds;
  if (j.contains("bonds")) {
    for (const auto& jb : j.at("bonds")) {
      if (!jb.is_array() || jb.size() < 3) throw Error(where + ": bond must be [i, j, order]");
      Bond b;
      b.begin = jb[0].get<int>();
      b.end = jb[1].get<int>();
      const int n = static_cast<int>(atoms.size());
      if (b.begin < 0 || b.end < 0 || b.begin >= n || b.end >= n)
        throw Error(where + ": bond index out of range");
      b.order = parse_bond_order(jb[2].get<std::string>());
      if (jb.size() > 3) b.rotatable = jb[3].get<bool>();
      if (b.order == BondOrder::Aromatic)
        atoms[static_cast<std::size_t>(b.begin)].aromatic = atoms[static_cast<std::size_t>(b.end)].aromatic = true;
      bonds.push_back(b);
    }
  }
  // Missing "h" means implicit hydrogens by the valence rules.
  bool need_h = false;
  for (auto& a : atoms)
    if (a.n_hydrogens < 0) {
      need_h = true;
      a.n_hydrogens = 0;
    }
  if (need_h) {
    const MolGraph g0 = MolGraph::build(atoms, bonds, role);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (j.at("atoms")[i].contains("h")) continue;
      atoms[i].n_hydrogens = implicit_hydrogens(atoms[i].atomic_number, atoms[i].formal_charge,
                                                valence_used(g0, static_cast<int>(i)));
    }
  }
  return MolGraph::build(std::move(atoms), std::move(bonds), role);
}

json side_to_json(const MolGraph& g) {
  json atoms = json::array();
  for (const auto& a : g.atoms()) {
    json ja;
    ja["el"] = std::string(element_symbol(a.atomic_number));
    ja["x"] = a.coords->x;
    ja["y"] = a.coords->y;
    ja["z"] = a.coords->z;
    ja["q"] = a.formal_charge;
    ja["h"] = a.n_hydrogens;
    atoms.push_back(ja);
  }
  json bonds = json::array();
  for (const auto& b : g.bonds()) {
    json jb = json::array({b.begin, b.end, std::string(bond_order_name(b.order))});
    if (b.rotatable) jb.push_back(true);
    bonds.push_back(jb);
  }
  return json{{"atoms", atoms}, {"bonds", bonds}};
}

}  // namespace

void validate_complex(const Complex& c) {
  if (c.id.empty()) throw Error("complex without id");
  if (c.ligand.num_atoms() == 0) throw Error("complex " + c.id + ": empty ligand");
  if (!c.ligand.has_coords()) throw Error("complex " + c.id + ": ligand lacks coordinates");
  if (c.protein.num_atoms() > 0 && !c.protein.has_coords())
    throw Error("complex " + c.id + ": protein lacks coordinates");
  if (c.ligand.role() != Role::Ligand || c.protein.role() != Role::Protein)
    throw Error("complex " + c.id + ": wrong graph roles");
}

Complex parse_complex_line(std::string_view line, std::size_t line_number) {
  const std::string where = "line " + std::to_string(line_number);
  try {
    const json j = json::parse(line);
    Complex c;
    c.id = j.at("id").get<std::string>();
    c.family_tag = j.value("family_tag", std::string{});
    c.ligand = parse_side(j.at("ligand"), Role::Ligand, where + " ligand");
    c.protein = j.contains("protein") ? parse_side(j.at("protein"), Role::Protein, where + " protein")
                                      : MolGraph::build({}, {}, Role::Protein);
    validate_complex(c);
    return c;
  } catch (const json::exception& e) {
    throw Error(where + ": malformed record: " + e.what());
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind("line ", 0) == 0) throw;
    throw Error(where + ": " + msg);
  }
}

std::vector<Complex> load_complexes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open complex file '" + path + "'");
  std::vector<Complex> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_complex_line(line, n));
  }
  return out;
}

std::string complex_to_json_line(const Complex& c) {
  json j;
  j["id"] = c.id;
  j["family_tag"] = c.family_tag;
  j["ligand"] = side_to_json(c.ligand);
  j["protein"] = side_to_json(c.protein);
  return j.dump();
}

void write_complexes(const std::string& path, std::span<const Complex> complexes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write complex file '" + path + "'");
  for (const auto& c : complexes) out << complex_to_json_line(c) << '\n';
}

}  // namespace pqr
