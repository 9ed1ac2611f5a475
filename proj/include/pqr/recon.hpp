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

// Reconstruction pathways, per-step examples and baseline-sampled negatives.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "pqr/shred.hpp"

namespace pqr {

constexpr int kMaxRejections = 100;

struct PathwayStep {
  int motif = 0;        // motif index in the shredding
  int core_atom = 0;    // parent atom on the already placed side
  int motif_atom = 0;   // parent atom on the new motif
  BondOrder order = BondOrder::Single;
};

struct Pathway {
  ShredResult shredding;
  int seed_motif = 0;
  std::vector<PathwayStep> steps;
};

/// Shreds `g` and orders the motifs: uniform seed, then uniform choice among
/// motifs adjacent to the placed set.
Pathway sample_pathway(const MolGraph& g, const ShredPolicy& policy, Rng& rng);
Pathway order_pathway(ShredResult s, Rng& rng);

/// Joins a standalone motif onto `core` at `core_atom` through a bond of the
/// given order, consuming hydrogens on both ends. Motif atoms are appended
/// after the core atoms; the new attachment index is core.num_atoms() +
/// motif.attachment. Coordinates are kept only if `motif_coords` is given.
MolGraph attach_motif(const MolGraph& core, int core_atom, const Motif& motif, BondOrder order,
                      const std::vector<Vec3>* motif_coords = nullptr);

/// Rebuilds the molecule from the pathway's standalone motif graphs.
MolGraph replay_pathway(const MolGraph& g, const Pathway& p);

struct ReconstructionStep {
  MolGraph core;
  int growth_atom = 0;
  std::string true_motif;
  std::size_t true_index = 0;  // vocabulary index of true_motif
  BondOrder true_bond_order = BondOrder::Single;
  std::vector<std::size_t> negatives;
  std::string complex_ref;
  std::vector<int> core_to_parent;
  std::vector<int> motif_parent_atoms;
  int source = -1;  // corpus index
};

/// One step per added motif. Steps whose true motif is not in `vocab` are
/// dropped and counted in `n_unknown`.
std::vector<ReconstructionStep> steps_from_pathway(const Pathway& p, const MolGraph& g, const Vocabulary& vocab,
                                                   std::size_t* n_unknown = nullptr);

/// Conditional motif distribution of a baseline model given a step's core and
/// growth atom. Weights need not be normalized.
class BaselineModel {
 public:
  virtual ~BaselineModel() = default;
  virtual std::vector<double> weights(const ReconstructionStep& step) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::string vocab_hash() const = 0;
  virtual std::string name() const = 0;
};

class UniformBaseline : public BaselineModel {
 public:
  explicit UniformBaseline(const Vocabulary& v) : n_(v.size()), hash_(v.hash()) {}
  std::vector<double> weights(const ReconstructionStep&) const override { return std::vector<double>(n_, 1.0); }
  std::size_t vocab_size() const override { return n_; }
  std::string vocab_hash() const override { return hash_; }
  std::string name() const override { return "0D"; }

 private:
  std::size_t n_;
  std::string hash_;
};

class FrequencyBaseline : public BaselineModel {
 public:
  explicit FrequencyBaseline(const Vocabulary& v) : p_(v.probabilities()), hash_(v.hash()) {}
  std::vector<double> weights(const ReconstructionStep&) const override { return p_; }
  std::size_t vocab_size() const override { return p_.size(); }
  std::string vocab_hash() const override { return hash_; }
  std::string name() const override { return "1D"; }

 private:
  std::vector<double> p_;
  std::string hash_;
};

/// k i.i.d. draws from `weights`, rejecting `truth`. Returns an empty list if
/// a draw needs more than kMaxRejections attempts.
std::vector<std::size_t> sample_negatives_from(std::span<const double> weights, std::size_t truth, int k, Rng& rng);

std::vector<std::size_t> sample_negatives(const ReconstructionStep& step, const BaselineModel& baseline, int k,
                                          Rng& rng);

std::vector<std::string> negative_keys(const ReconstructionStep& step, const Vocabulary& vocab);

}  // namespace pqr
