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
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>

#include "pqr/molio.hpp"

namespace pqr {

namespace {

constexpr int kImplicitH = -2;

struct ParsedAtom {
  Atom atom;
  bool bracket = false;
  int chiral_mark = 0;  // 0 none, 1 '@', 2 '@@'
  std::vector<int> neighbor_order;  // atom indices, kImplicitH, or placeholders (< -2)
};

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
  std::size_t slot;  // index into the opener's neighbor_order
};

int placeholder(int digit) { return -10 - digit; }

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view s) : s_(s) {}

  MolGraph parse() {
    if (s_.empty()) throw ParseError("empty SMILES", 0);
    int prev = -1;
    std::vector<int> branches;
    std::optional<BondOrder> pending = std::nullopt;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(') {
        if (prev < 0) throw ParseError("branch without preceding atom", pos_);
        branches.push_back(prev);
        ++pos_;
      } else if (c == ')') {
        if (branches.empty()) throw ParseError("unbalanced ')'", pos_);
        if (pending) throw ParseError("bond symbol before ')'", pos_);
        prev = branches.back();
        branches.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
        if (pending) throw ParseError("consecutive bond symbols", pos_);
        pending = c == '=' ? BondOrder::Double
                  : c == '#' ? BondOrder::Triple
                  : c == ':' ? BondOrder::Aromatic
                             : BondOrder::Single;
        ++pos_;
      } else if (c == '.') {
        if (pending) throw ParseError("bond symbol before '.'", pos_);
        prev = -1;
        ++pos_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0) throw ParseError("ring closure without preceding atom", pos_);
        int digit;
        if (c == '%') {
          if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
              !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
            throw ParseError("malformed %nn ring closure", pos_);
          digit = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
          pos_ += 3;
        } else {
          digit = c - '0';
          ++pos_;
        }
        ring_closure(prev, digit, pending);
        pending.reset();
      } else {
        const std::size_t atom_pos = pos_;
        const int idx = c == '[' ? bracket_atom() : organic_atom();
        if (prev >= 0) {
          add_bond(prev, idx, pending);
          atoms_[static_cast<std::size_t>(idx)].neighbor_order.insert(
              atoms_[static_cast<std::size_t>(idx)].neighbor_order.begin(), prev);
          atoms_[static_cast<std::size_t>(prev)].neighbor_order.push_back(idx);
        } else if (pending) {
          throw ParseError("bond symbol without preceding atom", atom_pos);
        }
        pending.reset();
        prev = idx;
      }
    }
    if (pending) throw ParseError("dangling bond symbol", s_.size());
    if (!branches.empty()) throw ParseError("unclosed branch", s_.size());
    if (!rings_.empty()) throw ParseError("unclosed ring " + std::to_string(rings_.begin()->first), s_.size());
    if (atoms_.empty()) throw ParseError("no atoms", 0);
    return finish();
  }

 private:
  int organic_atom() {
    const char c = s_[pos_];
    std::string sym;
    bool aromatic = false;
    if (c == 'C' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') {
      sym = "Cl";
    } else if (c == 'B' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') {
      sym = "Br";
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      sym = std::string(1, c);
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      sym = std::string(1, static_cast<char>(std::toupper(c)));
      aromatic = true;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    pos_ += sym.size();
    ParsedAtom pa;
    pa.atom.atomic_number = find_element(sym)->atomic_number;
    pa.atom.aromatic = aromatic;
    atoms_.push_back(std::move(pa));
    return static_cast<int>(atoms_.size()) - 1;
  }

  int bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;  // '['
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;  // isotope ignored
    if (pos_ >= s_.size()) throw ParseError("unterminated bracket atom", start);
    std::string sym;
    bool aromatic = false;
    const char c = s_[pos_];
    if (std::islower(static_cast<unsigned char>(c))) {
      // aromatic: se, as, or single letter
      if (pos_ + 1 < s_.size() && (s_.substr(pos_, 2) == "se" || s_.substr(pos_, 2) == "as")) {
        sym = std::string(1, static_cast<char>(std::toupper(c))) + s_[pos_ + 1];
        pos_ += 2;
      } else {
        sym = std::string(1, static_cast<char>(std::toupper(c)));
        ++pos_;
      }
      aromatic = true;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      sym = std::string(1, c);
      ++pos_;
      if (pos_ < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_]))) {
        std::string two = sym + s_[pos_];
        if (find_element(two)) {
          sym = two;
          ++pos_;
        }
      }
    } else {
      throw ParseError("expected element symbol", pos_);
    }
    if (sym == "H") throw ParseError("explicit hydrogen atoms are not supported", start);
    const ElementInfo* info = find_element(sym);
    if (!info) throw ParseError("unsupported element '" + sym + "'", start);
    ParsedAtom pa;
    pa.bracket = true;
    pa.atom.atomic_number = info->atomic_number;
    pa.atom.aromatic = aromatic;
    if (pos_ < s_.size() && s_[pos_] == '@') {
      ++pos_;
      pa.chiral_mark = 1;
      if (pos_ < s_.size() && s_[pos_] == '@') {
        ++pos_;
        pa.chiral_mark = 2;
      }
    }
    int h = 0;
    if (pos_ < s_.size() && s_[pos_] == 'H') {
      ++pos_;
      h = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) h = s_[pos_++] - '0';
    }
    pa.atom.n_hydrogens = h;
    int charge = 0;
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char sign = s_[pos_++];
      int mag = 1;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        mag = s_[pos_++] - '0';
      } else {
        while (pos_ < s_.size() && s_[pos_] == sign) {
          ++mag;
          ++pos_;
        }
      }
      charge = sign == '+' ? mag : -mag;
    }
    pa.atom.formal_charge = charge;
    if (pos_ < s_.size() && s_[pos_] == ':') {  // atom class, ignored
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ >= s_.size() || s_[pos_] != ']') throw ParseError("expected ']'", pos_);
    ++pos_;
    if (h > 0) pa.neighbor_order.push_back(kImplicitH);
    atoms_.push_back(std::move(pa));
    return static_cast<int>(atoms_.size()) - 1;
  }

  void add_bond(int a, int b, std::optional<BondOrder> order) {
    Bond bond;
    bond.begin = a;
    bond.end = b;
    if (order) {
      bond.order = *order;
    } else {
      const bool both_aromatic = atoms_[static_cast<std::size_t>(a)].atom.aromatic &&
                                 atoms_[static_cast<std::size_t>(b)].atom.aromatic;
      bond.order = both_aromatic ? BondOrder::Aromatic : BondOrder::Single;
      if (both_aromatic) implicit_aromatic_.push_back(bonds_.size());
    }
    for (const auto& e : bonds_)
      if ((e.begin == a && e.end == b) || (e.begin == b && e.end == a))
        throw ParseError("duplicate bond", pos_);
    bonds_.push_back(bond);
  }

  void ring_closure(int atom, int digit, std::optional<BondOrder> order) {
    auto it = rings_.find(digit);
    auto& list = atoms_[static_cast<std::size_t>(atom)].neighbor_order;
    if (it == rings_.end()) {
      list.push_back(placeholder(digit));
      rings_[digit] = RingOpen{atom, order, list.size() - 1};
      return;
    }
    RingOpen open = it->second;
    rings_.erase(it);
    if (open.atom == atom) throw ParseError("ring closure to the same atom", pos_);
    if (open.order && order && *open.order != *order) throw ParseError("conflicting ring-closure bond orders", pos_);
    add_bond(open.atom, atom, open.order ? open.order : order);
    list.push_back(open.atom);
    atoms_[static_cast<std::size_t>(open.atom)].neighbor_order[open.slot] = atom;
  }

  MolGraph finish() {
    // Implicit aromatic bonds outside rings become single (e.g. biaryl links).
    {
      std::vector<Atom> tmp;
      for (const auto& pa : atoms_) tmp.push_back(pa.atom);
      const MolGraph topo = MolGraph::build(tmp, bonds_, Role::Ligand);
      for (std::size_t bi : implicit_aromatic_)
        if (!topo.bond(static_cast<int>(bi)).in_ring) bonds_[bi].order = BondOrder::Single;
    }
    std::vector<Atom> atoms;
    for (const auto& pa : atoms_) atoms.push_back(pa.atom);
    MolGraph g0 = MolGraph::build(atoms, bonds_, Role::Ligand);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const int used = valence_used(g0, static_cast<int>(i));
      auto& a = atoms[i];
      const auto& info = element_info(a.atomic_number);
      if (!atoms_[i].bracket) {
        a.n_hydrogens = implicit_hydrogens(a.atomic_number, 0, used);
      } else if (info.organic || a.atomic_number == 14 || a.atomic_number == 34) {
        const int total = used + a.n_hydrogens;
        const int max_v = allowed_max_valence(a.atomic_number, a.formal_charge);
        if (total > max_v) throw ValenceError("valence violation on bracket atom " + std::to_string(i));
        // Radicals: deficit against the lowest feasible valence.
        if (element_info(a.atomic_number).symbol != "F" && a.atomic_number != 17 && a.atomic_number != 35 &&
            a.atomic_number != 53) {
          int target = max_v;
          if (a.formal_charge == 0) {
            for (int v : info.valences)
              if (v != 0 && v >= total) {
                target = v;
                break;
              }
          } else {
            target = total <= max_v ? implicit_hydrogens(a.atomic_number, a.formal_charge, total) + total : max_v;
          }
          a.n_radical = std::max(0, target - total);
        }
      }
    }
    MolGraph g1 = MolGraph::build(atoms, bonds_, Role::Ligand);

    bool any_chiral = false;
    for (const auto& pa : atoms_) any_chiral |= pa.chiral_mark != 0;
    if (!any_chiral) return g1;

    std::vector<std::uint64_t> init(g1.num_atoms());
    for (int i = 0; i < static_cast<int>(g1.num_atoms()); ++i) init[static_cast<std::size_t>(i)] = atom_invariant(g1, i, false);
    const auto colors = refine_colors(g1, init);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!atoms_[i].chiral_mark) continue;
      const auto& order = atoms_[i].neighbor_order;
      atoms[i].chirality = chirality_from_order(g1, colors, order, atoms_[i].chiral_mark == 1);
    }
    return MolGraph::build(atoms, bonds_, Role::Ligand);
  }

 public:
  // '@' means: viewed from order[0], order[1..3] run anticlockwise.
  static Chirality chirality_from_order(const MolGraph& g, const std::vector<std::uint64_t>& colors,
                                        const std::vector<int>& order, bool anticlockwise) {
    if (order.size() != 4) return Chirality::None;
    struct Key {
      int z;
      std::uint64_t color;
      std::size_t pos;
    };
    std::vector<Key> keys;
    for (std::size_t p = 0; p < 4; ++p) {
      const int n = order[p];
      if (n == kImplicitH) keys.push_back({1, 0, p});
      else keys.push_back({g.atom(n).atomic_number, colors[static_cast<std::size_t>(n)], p});
    }
    // rank: descending priority
    std::vector<std::size_t> by_priority{0, 1, 2, 3};
    std::sort(by_priority.begin(), by_priority.end(), [&](std::size_t a, std::size_t b) {
      if (keys[a].z != keys[b].z) return keys[a].z > keys[b].z;
      if (keys[a].color != keys[b].color) return keys[a].color > keys[b].color;
      return keys[a].pos < keys[b].pos;
    });
    // reference order: lowest first, then highest..third
    const std::array<std::size_t, 4> ref{by_priority[3], by_priority[0], by_priority[1], by_priority[2]};
    // parity of the permutation taking written positions to ref
    std::array<std::size_t, 4> perm = ref;
    int swaps = 0;
    for (std::size_t i = 0; i < 4; ++i)
      while (perm[i] != i) {
        std::swap(perm[i], perm[perm[i]]);
        ++swaps;
      }
    const bool odd = swaps % 2 == 1;
    const bool ref_anticlockwise = anticlockwise != odd;
    return ref_anticlockwise ? Chirality::R : Chirality::S;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<ParsedAtom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::size_t> implicit_aromatic_;
  std::map<int, RingOpen> rings_;
};

// ---- writer ---------------------------------------------------------------

std::string lower_symbol(std::string_view sym) {
  std::string s(sym);
  s[0] = static_cast<char>(std::tolower(s[0]));
  return s;
}

bool can_be_aromatic_symbol(int z) { return z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16 || z == 34; }

class SmilesWriter {
 public:
  explicit SmilesWriter(const MolGraph& g) : g_(g) {
    const std::size_t n = g.num_atoms();
    std::vector<std::uint64_t> init(n);
    for (std::size_t i = 0; i < n; ++i) init[i] = atom_invariant(g, static_cast<int>(i), false);
    colors_ = refine_colors(g, init);
    visited_.assign(n, false);
    parent_.assign(n, -1);
    children_.assign(n, {});
    ring_partners_.assign(n, {});
  }

  std::string write(int root, std::vector<int>* order) {
    const int n = static_cast<int>(g_.num_atoms());
    if (n == 0) return "";
    for (const auto& a : g_.atoms()) {
      if (a.aromatic && !can_be_aromatic_symbol(a.atomic_number))
        throw Error("atom not writable as aromatic: " + std::string(element_symbol(a.atomic_number)));
    }
    std::vector<int> roots;
    if (root < 0 || root >= n) root = 0;
    roots.push_back(root);
    std::string out;
    for (int s = -1; s < n; ++s) {
      const int r = s < 0 ? root : s;
      if (visited_[static_cast<std::size_t>(r)]) continue;
      dfs(r);
      if (!out.empty()) out += '.';
      emit(r, out);
    }
    if (order) *order = emitted_;
    return out;
  }

 private:
  void dfs(int root) {
    std::vector<int> stack{root};
    // iterative preorder DFS that records tree edges in neighbour-index order
    std::vector<std::size_t> next(g_.num_atoms(), 0);
    visited_[static_cast<std::size_t>(root)] = true;
    discover_.push_back(root);
    time_.resize(g_.num_atoms(), -1);
    time_[static_cast<std::size_t>(root)] = clock_++;
    while (!stack.empty()) {
      const int u = stack.back();
      const auto nbrs = g_.neighbors(u);
      auto& k = next[static_cast<std::size_t>(u)];
      if (k < nbrs.size()) {
        const int v = nbrs[k++].atom;
        if (!visited_[static_cast<std::size_t>(v)]) {
          visited_[static_cast<std::size_t>(v)] = true;
          time_[static_cast<std::size_t>(v)] = clock_++;
          parent_[static_cast<std::size_t>(v)] = u;
          children_[static_cast<std::size_t>(u)].push_back(v);
          stack.push_back(v);
        } else if (v != parent_[static_cast<std::size_t>(u)] && time_[static_cast<std::size_t>(v)] < time_[static_cast<std::size_t>(u)]) {
          // back edge u -> ancestor v (recorded once, from the descendant)
          ring_partners_[static_cast<std::size_t>(v)].push_back(u);
          ring_partners_[static_cast<std::size_t>(u)].push_back(v);
        }
      } else {
        stack.pop_back();
      }
    }
  }

  std::string bond_symbol(int u, int v) const {
    const auto& b = g_.bond(g_.find_bond(u, v));
    const bool both_ar = g_.atom(u).aromatic && g_.atom(v).aromatic;
    switch (b.order) {
      case BondOrder::Single: return both_ar ? "-" : "";
      case BondOrder::Double: return "=";
      case BondOrder::Triple: return "#";
      case BondOrder::Aromatic: return both_ar ? "" : ":";
    }
    return "";
  }

  bool needs_bracket(int u) const {
    const auto& a = g_.atom(u);
    const auto& info = element_info(a.atomic_number);
    if (!info.organic || a.formal_charge != 0 || a.chirality != Chirality::None || a.n_radical != 0) return true;
    if (a.aromatic && !(a.atomic_number == 5 || a.atomic_number == 6 || a.atomic_number == 7 ||
                        a.atomic_number == 8 || a.atomic_number == 15 || a.atomic_number == 16))
      return true;
    // What would the parser assign without brackets? Aromatic N/P donor status
    // depends on H, so evaluate with H = 0 like the parser does.
    std::vector<Atom> dummy;
    int used = 0;
    {
      int n_ar = 0, other = 0;
      bool exo_double = false;
      for (const auto& nb : g_.neighbors(u)) {
        const auto o = g_.bond(nb.bond).order;
        if (o == BondOrder::Aromatic) ++n_ar;
        else {
          other += bond_valence(o);
          if (o == BondOrder::Double) exo_double = true;
        }
      }
      used = other + n_ar;
      if (n_ar > 0) {
        const int z = a.atomic_number;
        bool donor = false;
        if (z == 8 || z == 16 || z == 34) donor = true;
        else if (z == 7 || z == 15) donor = g_.degree(u) >= 3;
        else if (z == 6) donor = exo_double;
        if (!donor) ++used;
      }
    }
    try {
      return implicit_hydrogens(a.atomic_number, 0, used) != a.n_hydrogens;
    } catch (const ValenceError&) {
      return true;
    }
  }

  std::string ring_label(int d) const {
    if (d < 10) return std::string(1, static_cast<char>('0' + d));
    return "%" + std::to_string(d);
  }

  int alloc_digit() {
    for (int d = 1; d < 100; ++d)
      if (!digits_in_use_[static_cast<std::size_t>(d)]) {
        digits_in_use_[static_cast<std::size_t>(d)] = true;
        return d;
      }
    throw Error("too many open rings for SMILES output");
  }

  void emit(int u, std::string& out) {
    emitted_.push_back(u);
    const auto& a = g_.atom(u);
    std::vector<int> written;  // neighbour order as seen by a parser
    const int par = parent_[static_cast<std::size_t>(u)];
    if (par >= 0) written.push_back(par);
    const bool bracket = needs_bracket(u);
    if (bracket && a.n_hydrogens > 0) written.push_back(kImplicitH);

    // Ring closures: closings first (partner already emitted), then openings.
    std::string ring_text;
    std::vector<int> closings, openings;
    for (int v : ring_partners_[static_cast<std::size_t>(u)]) {
      if (open_digit_.count(key(v, u))) closings.push_back(v);
      else openings.push_back(v);
    }
    std::sort(closings.begin(), closings.end(),
              [&](int x, int y) { return open_digit_.at(key(x, u)) < open_digit_.at(key(y, u)); });
    for (int v : closings) {
      const int d = open_digit_.at(key(v, u));
      ring_text += ring_label(d);
      digits_in_use_[static_cast<std::size_t>(d)] = false;
      open_digit_.erase(key(v, u));
      written.push_back(v);
    }
    for (int v : openings) {
      const int d = alloc_digit();
      open_digit_[key(u, v)] = d;
      ring_text += bond_symbol(u, v) + ring_label(d);
      written.push_back(v);
    }
    const auto& kids = children_[static_cast<std::size_t>(u)];
    for (int c : kids) written.push_back(c);

    std::string sym(element_symbol(a.atomic_number));
    if (a.aromatic) sym = lower_symbol(sym);
    if (!bracket) {
      out += sym;
    } else {
      out += '[';
      out += sym;
      if (a.chirality != Chirality::None) {
        // pick the mark that reproduces the stored label for this neighbour order
        const Chirality as_anticlockwise = SmilesParser::chirality_from_order(g_, colors_, written, true);
        out += as_anticlockwise == a.chirality ? "@" : "@@";
      }
      if (a.n_hydrogens > 0) {
        out += 'H';
        if (a.n_hydrogens > 1) out += std::to_string(a.n_hydrogens);
      }
      if (a.formal_charge != 0) {
        out += a.formal_charge > 0 ? '+' : '-';
        if (std::abs(a.formal_charge) > 1) out += std::to_string(std::abs(a.formal_charge));
      }
      out += ']';
    }
    out += ring_text;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) out += '(';
      out += bond_symbol(u, kids[i]);
      emit(kids[i], out);
      if (!last) out += ')';
    }
  }

  static std::uint64_t key(int opener, int closer) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(opener)) << 32) | static_cast<std::uint32_t>(closer);
  }

  const MolGraph& g_;
  std::vector<std::uint64_t> colors_;
  std::vector<bool> visited_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<std::vector<int>> ring_partners_;
  std::vector<int> discover_;
  std::vector<int> time_;
  int clock_ = 0;
  std::map<std::uint64_t, int> open_digit_;
  std::array<bool, 100> digits_in_use_{};
  std::vector<int> emitted_;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  return SmilesParser(text).parse();
}

std::string write_smiles(const MolGraph& g, int root, std::vector<int>* order) {
  return SmilesWriter(g).write(root, order);
}

std::vector<std::string> read_smiles_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open SMILES corpus '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    auto e = line.find_first_of(" \t\r", b);
    out.push_back(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
  }
  return out;
}

std::vector<MolGraph> read_smiles_corpus(const std::string& path) {
  std::vector<MolGraph> out;
  std::size_t n = 0;
  for (const auto& s : read_smiles_lines(path)) {
    ++n;
    try {
      out.push_back(parse_smiles(s));
    } catch (const Error& e) {
      throw Error(path + ": entry " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pqr
