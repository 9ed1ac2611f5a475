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

// Stochastic shredding into motifs, canonical motif keys, vocabularies and
// the frequency model over them.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "pqr/molio.hpp"

namespace pqr {

constexpr std::size_t kMaxMotifAtoms = 20;

class ShredError : public Error {
 public:
  using Error::Error;
};

struct ShredPolicy {
  std::uint64_t rng_seed = 0;
  int max_radius = 2;
  double directional_prob = 0.5;

  void validate() const;
  /// Identifies the shredding rules (not the seed). Two stages are compatible
  /// only if their fingerprints agree.
  std::string fingerprint() const;
  nlohmann::json to_json() const;
  static ShredPolicy from_json(const nlohmann::json& j);
};

struct Motif {
  MolGraph graph;       // role = motif, hydrogen-capped
  int attachment = 0;   // index into graph
};

/// A cut bond between two motifs of one shredded molecule.
struct MotifLink {
  int motif_a = 0;
  int motif_b = 0;
  int atom_a = 0;  // parent-molecule atom inside motif_a
  int atom_b = 0;  // parent-molecule atom inside motif_b
  BondOrder order = BondOrder::Single;
};

struct ShredResult {
  std::vector<std::vector<int>> motifs;  // parent atom indices, sorted
  std::vector<MotifLink> links;
  std::vector<int> motif_of;             // parent atom -> motif index
};

ShredResult shred(const MolGraph& g, const ShredPolicy& policy, Rng& rng);
/// Seeds a generator from policy.rng_seed.
ShredResult shred(const MolGraph& g, const ShredPolicy& policy);

/// Builds a standalone motif from parent atoms, attached at `attachment_parent`.
Motif make_motif(const MolGraph& g, std::span<const int> atoms, int attachment_parent);

/// Deterministic key, invariant under atom reordering and sensitive to the
/// attachment position.
std::string canonical_key(const Motif& m);
std::string canonical_key(const MolGraph& g, int attachment);

/// Canonical atom order (position -> atom index) used by canonical_key.
std::vector<int> canonical_order(const MolGraph& g, int attachment);

struct VocabEntry {
  std::string key;
  Motif motif;
  std::string smiles;  // rooted at the attachment atom
  std::int64_t count = 0;
};

/// Motif frequency table. Entries are kept sorted by descending count, then
/// key; the position of an entry is its index for every model.
class Vocabulary {
 public:
  Vocabulary() = default;

  void add(const std::string& key, const Motif& motif, std::int64_t count = 1);
  void merge(const Vocabulary& other);
  /// Re-sorts entries; call after the last add/merge.
  void finalize();

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::int64_t total() const { return total_; }
  const VocabEntry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  std::optional<std::size_t> find(const std::string& key) const;
  std::size_t index_of(const std::string& key) const;  // throws on unknown key

  double p1d(std::size_t i) const { return static_cast<double>(entries_[i].count) / static_cast<double>(total_); }
  std::vector<double> probabilities() const;

  /// Content hash over (key, count) pairs.
  std::string hash() const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::int64_t total_ = 0;
};

/// Adds the vocabulary contributions of one shredding of `g`: one count per
/// side of every cut bond, and one count for every unlinked motif, attached at
/// its canonically first atom with an open valence.
void count_shred(const MolGraph& g, const ShredResult& s, Vocabulary& v);

Vocabulary build_vocabulary(std::span<const MolGraph> corpus, const ShredPolicy& policy, int n_shreds_per_mol,
                            int workers = 1);

/// Inverse-transform draw from f(v)/sum f over the fixed entry order.
std::size_t sample_1d(const Vocabulary& v, Rng& rng);
/// Inverse-transform draw from arbitrary non-negative weights.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

struct ShiftRow {
  std::string key;
  std::string smiles;
  double p_a = 0.0;
  double p_b = 0.0;
  double ratio = 0.0;  // p_a / p_b, +inf when p_b == 0
};

std::vector<ShiftRow> vocabulary_shift(const Vocabulary& va, const Vocabulary& vb);
/// Rows with max(p_a, p_b) > min_p and ratio outside [1/ratio_cut, ratio_cut].
std::vector<ShiftRow> significant_shifts(std::span<const ShiftRow> rows, double min_p = 0.002,
                                         double ratio_cut = 2.0);

}  // namespace pqr
