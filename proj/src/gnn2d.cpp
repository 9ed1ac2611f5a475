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
#include <cmath>
#include <map>
#include <numeric>

#include "pqr/gnn2d.hpp"

namespace pqr {

using nlohmann::json;

// ---- graph batches ------------------------------------------------------------

std::size_t GraphBatch::add(const MolGraph& g) {
  std::vector<int> all(g.num_atoms());
  std::iota(all.begin(), all.end(), 0);
  return add(g, all);
}

std::size_t GraphBatch::add(const MolGraph& g, std::span<const int> atoms) {
  const std::size_t off = x.rows;
  offsets.push_back(off);
  std::vector<int> local(g.num_atoms(), -1);
  for (std::size_t i = 0; i < atoms.size(); ++i) local[static_cast<std::size_t>(atoms[i])] = static_cast<int>(i);
  for (int a : atoms) {
    const auto f = atom_features(g, a);
    x.data.insert(x.data.end(), f.begin(), f.end());
    ++x.rows;
  }
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (const auto& nb : g.neighbors(atoms[i])) {
      const int j = local[static_cast<std::size_t>(nb.atom)];
      if (j < 0) continue;
      src.push_back(static_cast<int>(off) + j);
      dst.push_back(static_cast<int>(off + i));
      const auto f = bond_features(g.bond(nb.bond));
      e.data.insert(e.data.end(), f.begin(), f.end());
      ++e.rows;
    }
  return off;
}

std::size_t GraphBatch::append(const GraphBatch& o) {
  const std::size_t off = x.rows;
  x.data.insert(x.data.end(), o.x.data.begin(), o.x.data.end());
  x.rows += o.x.rows;
  e.data.insert(e.data.end(), o.e.data.begin(), o.e.data.end());
  e.rows += o.e.rows;
  for (int s : o.src) src.push_back(s + static_cast<int>(off));
  for (int d : o.dst) dst.push_back(d + static_cast<int>(off));
  for (auto s : o.offsets) offsets.push_back(s + off);
  return off;
}

// ---- encoder and heads ----------------------------------------------------------

AtomEncoder AtomEncoder::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  AtomEncoder e;
  e.d = d;
  e.input = Linear::make(s, name + ".input", kAtomFeatureDim, d, rng);
  e.ga0_w = Linear::make(s, name + ".ga0.w", d + kBondFeatureDim, d, rng, false);
  e.ga0_wp = Linear::make(s, name + ".ga0.wp", d, d, rng, false);
  e.ga0_c1 = Linear::make(s, name + ".ga0.c1", d, 1, rng, false);
  e.ga0_c2 = Linear::make(s, name + ".ga0.c2", d, 1, rng, false);
  e.ga1_w = Linear::make(s, name + ".ga1.w", d, d, rng, false);
  e.ga1_ca = Linear::make(s, name + ".ga1.ca", d, 1, rng, false);
  e.ga1_cb = Linear::make(s, name + ".ga1.cb", d, 1, rng, false);
  for (int r = 0; r < kMessageRounds; ++r) e.gru[static_cast<std::size_t>(r)] = Gru::make(s, name + ".gru" + std::to_string(r), d, rng);
  return e;
}

Var AtomEncoder::ga0(Tape& t, Var x0, const GraphBatch& b) const {
  const std::vector<Var> pair{gather_rows(x0, b.src), t.constant(b.e)};
  Var xaa = leaky_relu(ga0_w(t, concat_cols(pair)));
  Var z = leaky_relu(add(gather_rows(ga0_c1(t, x0), b.dst), ga0_c2(t, xaa)));
  Var g = segment_softmax(z, b.dst, b.num_atoms());
  return segment_sum(mul_col(gather_rows(ga0_wp(t, x0), b.src), g), b.dst, b.num_atoms());
}

Var AtomEncoder::ga1(Tape& t, Var x, std::span<const int> src, std::span<const int> dst) const {
  const std::size_t n = x.rows();
  Var wx = ga1_w(t, x);
  Var z = leaky_relu(add(gather_rows(ga1_ca(t, wx), dst), gather_rows(ga1_cb(t, wx), src)));
  Var g = segment_softmax(z, dst, n);
  return segment_sum(mul_col(gather_rows(wx, src), g), dst, n);
}

Var AtomEncoder::operator()(Tape& t, const GraphBatch& b) const {
  const std::size_t n = b.num_atoms();
  Var x0 = leaky_relu(input(t, t.constant(b.x)));
  Var x = relu(gru[0](t, elu(ga0(t, x0, b)), x0));
  std::vector<int> src1 = b.src, dst1 = b.dst;
  for (std::size_t i = 0; i < n; ++i) {
    src1.push_back(static_cast<int>(i));
    dst1.push_back(static_cast<int>(i));
  }
  for (int r = 1; r < kMessageRounds; ++r)
    x = relu(gru[static_cast<std::size_t>(r)](t, elu(ga1(t, x, src1, dst1)), x));
  return layer_norm(x);
}

Heads2D Heads2D::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  Heads2D h;
  for (int mu = 0; mu < 2; ++mu)
    for (int k = 0; k < 3; ++k)
      h.stack[static_cast<std::size_t>(mu)][static_cast<std::size_t>(k)] =
          Linear::make(s, name + ".mu" + std::to_string(mu) + ".l" + std::to_string(k), d, d, rng);
  return h;
}

Var Heads2D::head(Tape& t, int mu, Var x) const {
  const auto& st = stack[static_cast<std::size_t>(mu)];
  Var y = softplus(st[0](t, x));
  y = softplus(st[1](t, y));
  return st[2](t, y);
}

void Heads2D::zero_output(ParameterStore& s) const {
  for (const auto& st : stack) st[2].zero(s);
}

// ---- model ------------------------------------------------------------------------

Model2D::Model2D(Vocabulary vocab, std::string policy_fingerprint, Model2DConfig cfg)
    : d_(cfg.d), vocab_(std::move(vocab)), policy_fp_(std::move(policy_fingerprint)) {
  if (d_ < 1) throw Error("model dimension must be >= 1");
  if (vocab_.empty()) throw Error("model needs a non-empty vocabulary");
  Rng rng(cfg.init_seed);
  enc_ = AtomEncoder::make(store_, "enc", d_, rng);
  heads_ = Heads2D::make(store_, "head2d", d_, rng);
  if (cfg.zero_heads) heads_.zero_output(store_);
  build_motif_graphs();
}

void Model2D::build_motif_graphs() {
  motif_graphs_.clear();
  for (const auto& e : vocab_.entries()) {
    GraphBatch b;
    b.add(e.motif.graph);
    motif_graphs_.push_back(std::move(b));
  }
}

void Model2D::set_vocabulary(Vocabulary v) {
  if (v.empty()) throw Error("model needs a non-empty vocabulary");
  vocab_ = std::move(v);
  build_motif_graphs();
  invalidate_cache();
}

void Model2D::invalidate_cache() { cache_.reset(); }

double Model2D::logit_scale() const { return 1.0 / (2.0 * std::sqrt(static_cast<double>(d_))); }

Var Model2D::context_vectors(Tape& t, Var X, std::span<const int> rows) const {
  Var xr = gather_rows(X, rows);
  const std::vector<Var> parts{heads_.head(t, 0, xr), heads_.head(t, 1, xr)};
  return concat_cols(parts);
}

Var Model2D::motif_vectors(Tape& t, Var X, std::span<const int> rows) const {
  Var xr = gather_rows(X, rows);
  const std::vector<Var> parts{heads_.head(t, 1, xr), heads_.head(t, 0, xr)};
  return concat_cols(parts);
}

Matrix Model2D::motif_vectors_direct(std::span<const std::size_t> entries) const {
  Matrix out(entries.size(), 2 * d_);
  constexpr std::size_t kChunk = 256;
  for (std::size_t b = 0; b < entries.size(); b += kChunk) {
    const std::size_t e = std::min(entries.size(), b + kChunk);
    GraphBatch gb;
    std::vector<int> rows;
    for (std::size_t i = b; i < e; ++i) {
      const auto off = gb.append(motif_graphs_.at(entries[i]));
      rows.push_back(static_cast<int>(off) + vocab_.entry(entries[i]).motif.attachment);
    }
    Tape t(&store_);
    const Matrix& v = motif_vectors(t, enc_(t, gb), rows).value();
    std::copy(v.data.begin(), v.data.end(), out.row(b));
  }
  return out;
}

const Matrix& Model2D::motif_cache() const {
  return cache_.get([this] {
    std::vector<std::size_t> all(vocab_.size());
    std::iota(all.begin(), all.end(), 0);
    return motif_vectors_direct(all);
  });
}

Matrix Model2D::context_vector(const MolGraph& core, int atom) const {
  if (atom < 0 || atom >= static_cast<int>(core.num_atoms())) throw Error("growth atom out of range");
  GraphBatch gb;
  gb.add(core);
  Tape t(&store_);
  const std::vector<int> rows{atom};
  return context_vectors(t, enc_(t, gb), rows).value();
}

std::vector<double> Model2D::logits(const MolGraph& core, int atom) const {
  const Matrix u = context_vector(core, atom);
  const Matrix& V = motif_cache();
  const double sc = logit_scale();
  std::vector<double> out(V.rows);
  for (std::size_t i = 0; i < V.rows; ++i) {
    double s = 0.0;
    const double* v = V.row(i);
    for (std::size_t j = 0; j < V.cols; ++j) s += v[j] * u.data[j];
    out[i] = s * sc;
  }
  return out;
}

std::vector<double> Model2D::q(const MolGraph& core, int atom) const {
  auto l = logits(core, atom);
  for (auto& x : l) x = std::exp(x);
  return l;
}

double Model2D::alpha2(const std::string& key, const MolGraph& core, int atom) const {
  const auto i = vocab_.find(key);
  if (!i) throw Error("unknown motif key " + key);
  return sigmoid_value(logits(core, atom)[*i]);
}

std::vector<double> Model2D::weights(const ReconstructionStep& step) const {
  auto l = logits(step.core, step.growth_atom);
  const double m = *std::max_element(l.begin(), l.end());
  for (std::size_t i = 0; i < l.size(); ++i) l[i] = vocab_.p1d(i) * std::exp(l[i] - m);
  return l;
}

Checkpoint Model2D::to_checkpoint() const {
  Checkpoint c;
  c.meta["kind"] = "model2d";
  c.meta["d"] = d_;
  c.meta["policy_fingerprint"] = policy_fp_;
  c.meta["vocab_hash"] = vocab_.hash();
  c.meta["vocabulary"] = vocab_.to_json();
  c.tensors["model2d"] = store_.to_json();
  return c;
}

Model2D Model2D::from_checkpoint(const Checkpoint& c) {
  if (c.meta.value("kind", "") != "model2d") throw FingerprintError("checkpoint is not a 2D model");
  Vocabulary v = Vocabulary::from_json(c.meta.at("vocabulary"));
  if (v.hash() != c.meta.at("vocab_hash").get<std::string>())
    throw FingerprintError("checkpoint vocabulary does not match its recorded hash");
  Model2DConfig cfg;
  cfg.d = c.meta.at("d").get<std::size_t>();
  Model2D m(std::move(v), c.meta.at("policy_fingerprint").get<std::string>(), cfg);
  m.store_.load_json(c.tensors.at("model2d"));
  return m;
}

// ---- training ---------------------------------------------------------------------

void contrastive_weights(std::size_t k, double pb, std::vector<double>& targets, std::vector<double>& weights) {
  targets.push_back(1.0);
  weights.push_back(1.0);
  for (std::size_t j = 0; j < k; ++j) {
    targets.push_back(0.0);
    weights.push_back((1.0 - pb) / static_cast<double>(k));
  }
  targets.push_back(0.0);
  weights.push_back(pb);
}

Var loss_2d(const Model2D& m, Tape& t, std::span<const ContrastiveExample> examples) {
  GraphBatch gb;
  std::vector<int> ctx_rows;
  for (const auto& ex : examples) {
    const auto off = gb.add(ex.step.core);
    ctx_rows.push_back(static_cast<int>(off) + ex.step.growth_atom);
  }
  std::map<std::size_t, int> slot;
  std::vector<int> motif_rows;
  auto motif_slot = [&](std::size_t i) {
    auto it = slot.find(i);
    if (it != slot.end()) return it->second;
    const auto off = gb.append(m.motif_graph(i));
    motif_rows.push_back(static_cast<int>(off) + m.vocabulary().entry(i).motif.attachment);
    return slot[i] = static_cast<int>(motif_rows.size()) - 1;
  };
  std::vector<int> pair_ctx, pair_motif;
  std::vector<double> y, w;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const auto& st = examples[e].step;
    const int truth = motif_slot(st.true_index);
    pair_ctx.push_back(static_cast<int>(e));
    pair_motif.push_back(truth);
    for (auto n : st.negatives) {
      pair_ctx.push_back(static_cast<int>(e));
      pair_motif.push_back(motif_slot(n));
    }
    pair_ctx.push_back(static_cast<int>(e));
    pair_motif.push_back(truth);
    contrastive_weights(st.negatives.size(), examples[e].p_truth_baseline, y, w);
  }
  Var X = m.encoder()(t, gb);
  Var U = m.context_vectors(t, X, ctx_rows);
  Var V = m.motif_vectors(t, X, motif_rows);
  Var s = scale(rowwise_dot(gather_rows(U, pair_ctx), gather_rows(V, pair_motif)), m.logit_scale());
  return bce_with_logits(s, y, w);
}

TrainReport train_2d_steps(Model2D& m, std::size_t n_units, const StepSource& source, const BaselineModel& baseline,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (baseline.vocab_hash() != m.vocab_hash()) throw FingerprintError("baseline and model vocabularies differ");
  ContrastiveTask task = unit_task(
      n_units,
      [&source, &baseline, k = cfg.k_neg](std::size_t u, Rng& rng, std::size_t* skipped) {
        std::vector<ContrastiveExample> out;
        for (auto& st : source(u, rng)) {
          ContrastiveExample ex;
          if (make_example(std::move(st), u, baseline, k, rng, ex)) out.push_back(std::move(ex));
          else ++*skipped;
        }
        return out;
      },
      cfg);
  task.loss = [&m](Tape& t, std::span<const ContrastiveExample> ex) { return loss_2d(m, t, ex); };
  task.on_update = [&m] { m.invalidate_cache(); };
  return run_contrastive(m.store(), task, cfg);
}

StepSource pathway_steps(std::span<const MolGraph> corpus, const ShredPolicy& policy, const Vocabulary& vocab) {
  return [corpus, policy, &vocab](std::size_t unit, Rng& rng) {
    const auto& g = corpus[unit];
    const auto p = sample_pathway(g, policy, rng);
    auto steps = steps_from_pathway(p, g, vocab);
    for (auto& s : steps) s.source = static_cast<int>(unit);
    return steps;
  };
}

TrainReport train_2d(Model2D& m, std::span<const MolGraph> corpus, const ShredPolicy& policy,
                     const BaselineModel& baseline, const TrainConfig& cfg) {
  if (corpus.empty()) throw Error("empty training corpus");
  if (policy.fingerprint() != m.policy_fingerprint())
    throw FingerprintError("shred policy differs from the one the vocabulary was built with");
  return train_2d_steps(m, corpus.size(), pathway_steps(corpus, policy, m.vocabulary()), baseline, cfg);
}

TrainReport recalibrate(Model2D& m, std::span<const MolGraph> corpus2, Vocabulary vocab2, const ShredPolicy& policy,
                        TrainConfig cfg) {
  if (corpus2.empty()) throw Error("empty recalibration corpus");
  if (policy.fingerprint() != m.policy_fingerprint())
    throw FingerprintError("recalibration policy differs from the 2D training policy");
  m.set_vocabulary(std::move(vocab2));
  const FrequencyBaseline base(m.vocabulary());
  cfg.patience = 0;
  cfg.holdout_fraction = 0.0;
  return train_2d_steps(m, corpus2.size(), pathway_steps(corpus2, policy, m.vocabulary()), base, cfg);
}

}  // namespace pqr
