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

// Topological atom encoder, 2D growth/motif heads and the q factor.

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pqr/nn.hpp"
#include "pqr/recon.hpp"
#include "pqr/train.hpp"

namespace pqr {

/// Disjoint union of featurized graphs. Edges are stored once per direction.
struct GraphBatch {
  Matrix x{0, kAtomFeatureDim};
  Matrix e{0, kBondFeatureDim};
  std::vector<int> src;  // message sender
  std::vector<int> dst;  // message receiver
  std::vector<std::size_t> offsets;

  /// Appends a whole graph; returns its first row.
  std::size_t add(const MolGraph& g);
  /// Appends the atoms `atoms` of `g` with features taken from the full graph
  /// and only the bonds among them. Row i of the block is atoms[i].
  std::size_t add(const MolGraph& g, std::span<const int> atoms);
  /// Appends another batch; returns the row offset of its first atom.
  std::size_t append(const GraphBatch& o);
  std::size_t num_atoms() const { return x.rows; }
};

constexpr int kMessageRounds = 4;

struct AtomEncoder {
  std::size_t d = 0;
  Linear input;             // 36 -> d
  Linear ga0_w, ga0_wp;     // W (d+6 -> d), W' (d -> d)
  Linear ga0_c1, ga0_c2;    // d -> 1
  Linear ga1_w;             // d -> d
  Linear ga1_ca, ga1_cb;    // c split over (receiver || sender)
  std::array<Gru, kMessageRounds> gru;

  static AtomEncoder make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  /// n_atoms x d embeddings, LayerNorm applied.
  Var operator()(Tape& t, const GraphBatch& b) const;
  /// First-shell attention with bond features; returns the messages h.
  Var ga0(Tape& t, Var x0, const GraphBatch& b) const;
  /// Attention along edges and self loops given as (src, dst) lists.
  Var ga1(Tape& t, Var x, std::span<const int> src, std::span<const int> dst) const;
};

/// Two SoftPlus dense layers and a linear output, one stack per mu.
struct Heads2D {
  std::array<std::array<Linear, 3>, 2> stack;

  static Heads2D make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  Var head(Tape& t, int mu, Var x) const;
  void zero_output(ParameterStore& s) const;
};

struct Model2DConfig {
  std::size_t d = 64;
  std::uint64_t init_seed = 1;
  bool zero_heads = false;
};

/// G_pq: frequencies of the attached vocabulary times q = alpha2/(1-alpha2).
class Model2D : public BaselineModel {
 public:
  Model2D(Vocabulary vocab, std::string policy_fingerprint, Model2DConfig cfg = {});

  std::size_t dim() const { return d_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const std::string& policy_fingerprint() const { return policy_fp_; }
  /// Switches the frequency table and motif set (domain recalibration).
  void set_vocabulary(Vocabulary v);

  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const AtomEncoder& encoder() const { return enc_; }
  const Heads2D& heads() const { return heads_; }
  /// Featurized exemplar graph of vocabulary entry i.
  const GraphBatch& motif_graph(std::size_t i) const { return motif_graphs_[i]; }
  /// Must be called after any parameter change.
  void invalidate_cache();

  // Differentiable pieces over an encoded batch X.
  Var context_vectors(Tape& t, Var X, std::span<const int> rows) const;  // u = x0 || x1
  Var motif_vectors(Tape& t, Var X, std::span<const int> rows) const;    // v = x1 || x0
  double logit_scale() const;                                             // 1 / (2 sqrt d)

  /// |V| x 2d motif vectors, computed once per parameter state.
  const Matrix& motif_cache() const;
  /// Direct evaluation for selected entries (bypasses the cache).
  Matrix motif_vectors_direct(std::span<const std::size_t> entries) const;
  /// 1 x 2d growth vector.
  Matrix context_vector(const MolGraph& core, int atom) const;

  /// Logits <v,u>/(2 sqrt d) over the vocabulary; q = exp(logit).
  std::vector<double> logits(const MolGraph& core, int atom) const;
  std::vector<double> q(const MolGraph& core, int atom) const;
  double alpha2(const std::string& key, const MolGraph& core, int atom) const;

  std::vector<double> weights(const ReconstructionStep& step) const override;
  std::size_t vocab_size() const override { return vocab_.size(); }
  std::string vocab_hash() const override { return vocab_.hash(); }
  std::string name() const override { return "2D"; }

  Checkpoint to_checkpoint() const;
  static Model2D from_checkpoint(const Checkpoint& c);

 private:
  std::size_t d_;
  Vocabulary vocab_;
  std::string policy_fp_;
  ParameterStore store_;
  AtomEncoder enc_;
  Heads2D heads_;
  std::vector<GraphBatch> motif_graphs_;
  LazyMatrix cache_;

  void build_motif_graphs();
};

/// Summed contrastive loss of a run of examples under the 2D model.
Var loss_2d(const Model2D& m, Tape& t, std::span<const ContrastiveExample> examples);

/// Reconstruction steps (without negatives) for one unit of data.
using StepSource = std::function<std::vector<ReconstructionStep>(std::size_t unit, Rng& rng)>;

/// Contrastive training of q against `baseline` over units produced by
/// `source`; a seeded holdout split of the units drives early stopping.
TrainReport train_2d_steps(Model2D& m, std::size_t n_units, const StepSource& source, const BaselineModel& baseline,
                           const TrainConfig& cfg);

/// Steps from freshly sampled reconstruction pathways of corpus molecules.
StepSource pathway_steps(std::span<const MolGraph> corpus, const ShredPolicy& policy, const Vocabulary& vocab);

/// 2D phase: pathways over `corpus`, negatives from `baseline` (normally G_p).
TrainReport train_2d(Model2D& m, std::span<const MolGraph> corpus, const ShredPolicy& policy,
                     const BaselineModel& baseline, const TrainConfig& cfg);

/// Domain recalibration: switches to `vocab2` and continues training on
/// `corpus2` against the frequency model of `vocab2` for exactly
/// cfg.max_epochs epochs (no early stopping).
TrainReport recalibrate(Model2D& m, std::span<const MolGraph> corpus2, Vocabulary vocab2, const ShredPolicy& policy,
                        TrainConfig cfg);

/// Logistic weights for one contrastive example: the truth with target 1 and
/// weight 1; each of k negatives with target 0 and weight (1 - p_b(truth))/k;
/// the truth once more with target 0 and weight p_b(truth). In expectation
/// over the rejection sampler this equals the un-rejected baseline rate.
void contrastive_weights(std::size_t k, double p_truth_baseline, std::vector<double>& targets,
                         std::vector<double>& weights);

}  // namespace pqr
