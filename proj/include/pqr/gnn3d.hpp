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

// Triplet hypergraph around a growth atom, triangle attention and the r factor.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "pqr/augment.hpp"
#include "pqr/gnn2d.hpp"

namespace pqr {

struct PriorParams {
  double delta = 0.5;          // cutoff transition width, Angstrom
  double w0 = 1.0;
  double beta = 0.1;
  double r_cut_protein = 7.5;
  double r_cut_ligand = 3.0;
  double r_min = 0.5;          // clamp inside g

  void validate() const;
  nlohmann::json to_json() const;
  static PriorParams from_json(const nlohmann::json& j);
};

/// Cosine switch: 1 up to r_cut - delta, 0 from r_cut.
double fcut(double r, double r_cut, double delta);
/// Radial discount (1 - omega)/r^2 + omega w0 with omega = sigmoid(-beta (r^2 - rho^2)),
/// rho = r_cut - 2 delta.
double prior_g(double r, double r_cut, const PriorParams& p);

constexpr std::size_t kRbfCenters = 9;
constexpr double kRbfSigma = 1.0;
constexpr std::size_t kTripletFeatureDim = 1 + 3 * kRbfCenters + 6;

/// 34 features of the ordered triplet (a, b, b'): self bit, RBF(r_ab),
/// RBF(r_ab'), RBF(r_bb'), then (cos, sin) of the interior angles at a, b, b'.
/// Undefined angles (zero-length sides) are (1, 0).
std::array<double, kTripletFeatureDim> triplet_features(const Vec3& a, const Vec3& b, const Vec3& bp, bool self);

struct EnvAtom {
  bool protein = false;
  int index = 0;   // atom of the protein or the core
  Vec3 pos;
  double r = 0.0;  // distance to the growth atom
  double r_cut = 0.0;
};

struct HyperEnv {
  int center = 0;
  Vec3 center_pos;
  std::vector<EnvAtom> atoms;
  std::vector<int> tb, tbp;               // env indices of each ordered triplet
  Matrix t{0, kTripletFeatureDim};
  std::vector<double> w;                  // attention priors

  std::size_t num_triplets() const { return tb.size(); }
};

/// Protein atoms within r_cut_protein and core atoms (other than `atom`)
/// within r_cut_ligand of the growth atom; all ordered pairs, b = b' included.
HyperEnv build_hyperenv(const MolGraph& protein, const MolGraph& core, int atom, const PriorParams& p = {});

/// Core of a step with coordinates copied from the parent ligand.
MolGraph place_core(const ReconstructionStep& step, const MolGraph& ligand);

/// Protein atoms within `radius` of any of `centers`, grown by `hops` bonds.
std::vector<int> crop_protein(const MolGraph& protein, std::span<const Vec3> centers, double radius, int hops);

/// Hypernode-to-atom attention with priors (outward or inward).
struct TriangleAttention {
  Linear x0, x1, x2;   // d -> d
  Linear w;            // message, (3d + 34) -> d
  Linear w_recv;       // d -> d
  Linear w_hyp;        // (3d + 34) -> d
  Linear c;            // d -> 1

  static TriangleAttention make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  /// Hypernode vectors x0[a] || x1[b] || x2[b'] || t.
  Var hypernodes(Tape& t, Var x, std::span<const int> a, std::span<const int> b, std::span<const int> bp,
                 const Matrix& feats) const;
  /// Prior-reweighted attention of hypernodes h onto receivers; returns the
  /// n_recv x d messages. `x_recv` holds the receiver vector of each hypernode.
  Var attend(Tape& t, Var x_recv, Var h, std::span<const double> prior, std::span<const int> recv,
             std::size_t n_recv) const;
};

/// Attentive pooling of member atoms into one vector per segment.
struct Reduce {
  Linear w0, w1, c, w;

  static Reduce make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  Var operator()(Tape& t, Var x, std::span<const int> segment, std::size_t n) const;
};

/// Concatenation of hyper-environments over a shared node matrix.
struct EnvBatch {
  std::vector<int> node_rows;    // row of the encoded batch for each node
  std::vector<int> center_node;  // per environment
  std::vector<int> ta, tb, tbp;  // node indices per triplet
  std::vector<int> env_of;       // environment of each triplet
  Matrix t{0, kTripletFeatureDim};
  std::vector<double> w;

  /// `center_row` and `atom_rows[i]` are encoded-batch rows of the growth
  /// atom and of env.atoms[i].
  void add(const HyperEnv& env, int center_row, std::span<const int> atom_rows);
  std::size_t size() const { return center_node.size(); }
};

struct Model3DConfig {
  std::size_t d = 64;
  std::uint64_t init_seed = 2;
  bool zero_output = false;
  PriorParams prior;
  int crop_hops = kMessageRounds;
};

/// G_pqr factor r = alpha3/(1 - alpha3) on top of a 2D vocabulary.
class Model3D {
 public:
  Model3D(Vocabulary vocab, std::string policy_fingerprint, Model3DConfig cfg = {});

  std::size_t dim() const { return cfg_.d; }
  const Model3DConfig& config() const { return cfg_; }
  const PriorParams& prior() const { return cfg_.prior; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const std::string& policy_fingerprint() const { return policy_fp_; }
  std::string vocab_hash() const { return vocab_.hash(); }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const AtomEncoder& encoder() const { return enc_; }
  const GraphBatch& motif_graph(std::size_t i) const { return motif_graphs_[i]; }

  /// Copies the 2D encoder weights (same dimension required).
  void init_encoder_from(const Model2D& m2);
  void invalidate_cache();

  // Differentiable pieces over an encoded batch X.
  Var env_embeddings(Tape& t, Var X, const EnvBatch& envs) const;   // n_env x d growth vectors
  Var motif_vectors(Tape& t, Var X, std::span<const int> attachment_rows, std::span<const int> member_rows,
                    std::span<const int> member_segment) const;
  double logit_scale() const;  // 1 / sqrt d

  // Pieces exposed for gradient checks.
  const ResTrans& restrans_env0() const { return rt0_; }
  const ResTrans& restrans_env2() const { return rt2_; }
  const TriangleAttention& outward() const { return out_; }
  const TriangleAttention& inward() const { return in_; }
  const Reduce& reduce() const { return reduce_; }

  const Matrix& motif_cache() const;
  Matrix motif_vectors_direct(std::span<const std::size_t> entries) const;

  /// 1 x d growth vector for `atom` of `core` (with coordinates) in `protein`.
  Matrix context_vector(const MolGraph& protein, const MolGraph& core, int atom) const;
  std::vector<double> logits(const MolGraph& protein, const MolGraph& core, int atom) const;
  std::vector<double> r(const MolGraph& protein, const MolGraph& core, int atom) const;
  double alpha3(const std::string& key, const MolGraph& protein, const MolGraph& core, int atom) const;

  Checkpoint to_checkpoint() const;
  static Model3D from_checkpoint(const Checkpoint& c);

 private:
  Model3DConfig cfg_;
  Vocabulary vocab_;
  std::string policy_fp_;
  ParameterStore store_;
  AtomEncoder enc_;
  ResTrans rt0_, rt2_;
  TriangleAttention out_, in_;
  Linear w_out_;
  ResTrans rt_vec_, rt_env_;
  Reduce reduce_;
  Linear motif_out_;
  std::vector<GraphBatch> motif_graphs_;
  LazyMatrix cache_;
};

/// Summed contrastive loss of 3D examples (each carries its complex).
Var loss_3d(const Model3D& m, Tape& t, std::span<const ContrastiveExample> examples);

/// One augmented complex turned into examples: coloured noise and torsion
/// jitter, a fresh pathway over the ligand, negatives from `baseline`.
std::vector<ContrastiveExample> complex_examples(const Complex& c, std::size_t unit, const BaselineModel& baseline,
                                                 const Vocabulary& vocab, const ShredPolicy& policy,
                                                 const NoiseConfig& noise, int k_neg, Rng& rng,
                                                 std::size_t* n_skipped);

/// 3D phase against the recalibrated 2D model.
TrainReport train_3d(Model3D& m, std::span<const Complex> complexes, const Model2D& baseline,
                     const ShredPolicy& policy, const NoiseConfig& noise, const TrainConfig& cfg);

}  // namespace pqr
