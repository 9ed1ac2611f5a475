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

#include "pqr/gnn3d.hpp"

namespace pqr {

using nlohmann::json;

// ---- priors and features ----------------------------------------------------------

void PriorParams::validate() const {
  if (!(delta > 0.0)) throw Error("prior delta must be > 0");
  if (!(r_cut_protein > delta && r_cut_ligand > delta)) throw Error("cutoffs must exceed delta");
  if (!(r_min > 0.0)) throw Error("prior r_min must be > 0");
  if (!(beta >= 0.0)) throw Error("prior beta must be >= 0");
}

json PriorParams::to_json() const {
  return {{"delta", delta}, {"w0", w0}, {"beta", beta}, {"r_cut_protein", r_cut_protein},
          {"r_cut_ligand", r_cut_ligand}, {"r_min", r_min}};
}

PriorParams PriorParams::from_json(const json& j) {
  PriorParams p;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "delta") p.delta = it->get<double>();
    else if (k == "w0") p.w0 = it->get<double>();
    else if (k == "beta") p.beta = it->get<double>();
    else if (k == "r_cut_protein") p.r_cut_protein = it->get<double>();
    else if (k == "r_cut_ligand") p.r_cut_ligand = it->get<double>();
    else if (k == "r_min") p.r_min = it->get<double>();
    else throw Error("unknown prior option '" + k + "'");
  }
  p.validate();
  return p;
}

double fcut(double r, double r_cut, double delta) {
  if (r <= r_cut - delta) return 1.0;
  if (r >= r_cut) return 0.0;
  return 0.5 * (1.0 + std::cos(M_PI * (r - r_cut + delta) / delta));
}

double prior_g(double r, double r_cut, const PriorParams& p) {
  r = std::max(r, p.r_min);
  const double rho = r_cut - 2.0 * p.delta;
  const double omega = sigmoid_value(-p.beta * (r * r - rho * rho));
  return (1.0 - omega) / (r * r) + omega * p.w0;
}

namespace {

void rbf(double r, double* out) {
  for (std::size_t k = 0; k < kRbfCenters; ++k) {
    const double x = r - static_cast<double>(k);
    out[k] = std::exp(-x * x / (2.0 * kRbfSigma * kRbfSigma));
  }
}

// interior angle at p of the triangle (p, q, s)
void angle(const Vec3& p, const Vec3& q, const Vec3& s, double* out) {
  const Vec3 u = q - p, v = s - p;
  const double nu = u.norm(), nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    out[0] = 1.0;
    out[1] = 0.0;
    return;
  }
  out[0] = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  out[1] = u.cross(v).norm() / (nu * nv);
}

}  // namespace

std::array<double, kTripletFeatureDim> triplet_features(const Vec3& a, const Vec3& b, const Vec3& bp, bool self) {
  std::array<double, kTripletFeatureDim> f{};
  f[0] = self ? 1.0 : 0.0;
  rbf(distance(a, b), f.data() + 1);
  rbf(distance(a, bp), f.data() + 1 + kRbfCenters);
  rbf(self ? 0.0 : distance(b, bp), f.data() + 1 + 2 * kRbfCenters);
  double* ang = f.data() + 1 + 3 * kRbfCenters;
  angle(a, b, bp, ang);
  angle(b, a, bp, ang + 2);
  angle(bp, a, b, ang + 4);
  return f;
}

HyperEnv build_hyperenv(const MolGraph& protein, const MolGraph& core, int atom, const PriorParams& p) {
  if (atom < 0 || atom >= static_cast<int>(core.num_atoms())) throw Error("growth atom out of range");
  const auto& ca = core.atom(atom);
  if (!ca.coords) throw Error("growth atom has no coordinates");
  HyperEnv env;
  env.center = atom;
  env.center_pos = *ca.coords;
  for (std::size_t i = 0; i < protein.num_atoms(); ++i) {
    const auto& c = protein.atom(static_cast<int>(i)).coords;
    if (!c) throw Error("protein atom without coordinates");
    const double r = distance(*c, env.center_pos);
    if (r < p.r_cut_protein) env.atoms.push_back({true, static_cast<int>(i), *c, r, p.r_cut_protein});
  }
  for (std::size_t i = 0; i < core.num_atoms(); ++i) {
    if (static_cast<int>(i) == atom) continue;
    const auto& c = core.atom(static_cast<int>(i)).coords;
    if (!c) throw Error("core atom without coordinates");
    const double r = distance(*c, env.center_pos);
    if (r < p.r_cut_ligand) env.atoms.push_back({false, static_cast<int>(i), *c, r, p.r_cut_ligand});
  }
  const std::size_t m = env.atoms.size();
  std::vector<double> f(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& e = env.atoms[i];
    f[i] = fcut(e.r, e.r_cut, p.delta) * prior_g(e.r, e.r_cut, p);
  }
  env.t = Matrix(0, kTripletFeatureDim);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      env.tb.push_back(static_cast<int>(i));
      env.tbp.push_back(static_cast<int>(j));
      const auto tf = triplet_features(env.center_pos, env.atoms[i].pos, env.atoms[j].pos, i == j);
      env.t.data.insert(env.t.data.end(), tf.begin(), tf.end());
      ++env.t.rows;
      env.w.push_back(f[i] * f[j]);
    }
  return env;
}

MolGraph place_core(const ReconstructionStep& step, const MolGraph& ligand) {
  if (step.core_to_parent.size() != step.core.num_atoms()) throw Error("step has no parent atom map");
  std::vector<Vec3> xyz;
  xyz.reserve(step.core.num_atoms());
  for (int p : step.core_to_parent) {
    const auto& c = ligand.atom(p).coords;
    if (!c) throw Error("ligand atom without coordinates");
    xyz.push_back(*c);
  }
  return step.core.with_coords(xyz);
}

std::vector<int> crop_protein(const MolGraph& protein, std::span<const Vec3> centers, double radius, int hops) {
  const std::size_t n = protein.num_atoms();
  std::vector<int> depth(n, -1);
  std::vector<int> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = protein.atom(static_cast<int>(i)).coords;
    if (!c) throw Error("protein atom without coordinates");
    for (const auto& x : centers)
      if (distance(*c, x) < radius) {
        depth[i] = 0;
        frontier.push_back(static_cast<int>(i));
        break;
      }
  }
  for (int h = 0; h < hops && !frontier.empty(); ++h) {
    std::vector<int> next;
    for (int a : frontier)
      for (const auto& nb : protein.neighbors(a))
        if (depth[static_cast<std::size_t>(nb.atom)] < 0) {
          depth[static_cast<std::size_t>(nb.atom)] = h + 1;
          next.push_back(nb.atom);
        }
    frontier = std::move(next);
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i)
    if (depth[i] >= 0) out.push_back(static_cast<int>(i));
  return out;
}

// ---- layers ------------------------------------------------------------------------

TriangleAttention TriangleAttention::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  TriangleAttention a;
  const std::size_t hd = 3 * d + kTripletFeatureDim;
  a.x0 = Linear::make(s, name + ".x0", d, d, rng);
  a.x1 = Linear::make(s, name + ".x1", d, d, rng);
  a.x2 = Linear::make(s, name + ".x2", d, d, rng);
  a.w = Linear::make(s, name + ".w", hd, d, rng, false);
  a.w_recv = Linear::make(s, name + ".wr", d, d, rng, false);
  a.w_hyp = Linear::make(s, name + ".wh", hd, d, rng);
  a.c = Linear::make(s, name + ".c", d, 1, rng, false);
  return a;
}

Var TriangleAttention::hypernodes(Tape& t, Var x, std::span<const int> a, std::span<const int> b,
                                  std::span<const int> bp, const Matrix& feats) const {
  const std::vector<Var> parts{gather_rows(x0(t, x), a), gather_rows(x1(t, x), b), gather_rows(x2(t, x), bp),
                               t.constant(feats)};
  return concat_cols(parts);
}

Var TriangleAttention::attend(Tape& t, Var x_recv, Var h, std::span<const double> prior, std::span<const int> recv,
                              std::size_t n_recv) const {
  Var hh = leaky_relu(add(w_recv(t, x_recv), w_hyp(t, h)));
  Var z = leaky_relu(c(t, hh));
  Var g = segment_softmax(z, prior, recv, n_recv);
  return segment_sum(mul_col(w(t, h), g), recv, n_recv);
}

Reduce Reduce::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  Reduce r;
  r.w0 = Linear::make(s, name + ".w0", d, d, rng);
  r.w1 = Linear::make(s, name + ".w1", d, d, rng, false);
  r.c = Linear::make(s, name + ".c", d, 1, rng, false);
  r.w = Linear::make(s, name + ".w", d, d, rng, false);
  return r;
}

Var Reduce::operator()(Tape& t, Var x, std::span<const int> segment, std::size_t n) const {
  Var pool = segment_sum(x, segment, n);
  Var h = leaky_relu(add(w0(t, x), gather_rows(w1(t, pool), segment)));
  Var g = segment_softmax(leaky_relu(c(t, h)), segment, n);
  Var delta = segment_sum(mul_col(w(t, x), g), segment, n);
  return layer_norm(elu(add(pool, delta)));
}

void EnvBatch::add(const HyperEnv& env, int center_row, std::span<const int> atom_rows) {
  if (atom_rows.size() != env.atoms.size()) throw Error("env row map size mismatch");
  const int base = static_cast<int>(node_rows.size());
  const int e = static_cast<int>(center_node.size());
  center_node.push_back(base);
  node_rows.push_back(center_row);
  node_rows.insert(node_rows.end(), atom_rows.begin(), atom_rows.end());
  for (std::size_t k = 0; k < env.num_triplets(); ++k) {
    ta.push_back(base);
    tb.push_back(base + 1 + env.tb[k]);
    tbp.push_back(base + 1 + env.tbp[k]);
    env_of.push_back(e);
    w.push_back(env.w[k]);
  }
  t.data.insert(t.data.end(), env.t.data.begin(), env.t.data.end());
  t.rows += env.t.rows;
}

// ---- model ------------------------------------------------------------------------

Model3D::Model3D(Vocabulary vocab, std::string policy_fingerprint, Model3DConfig cfg)
    : cfg_(cfg), vocab_(std::move(vocab)), policy_fp_(std::move(policy_fingerprint)) {
  if (cfg_.d < 1) throw Error("model dimension must be >= 1");
  if (vocab_.empty()) throw Error("model needs a non-empty vocabulary");
  if (cfg_.crop_hops < kMessageRounds) throw Error("crop_hops must cover the encoder's message rounds");
  cfg_.prior.validate();
  const std::size_t d = cfg_.d;
  Rng rng(cfg_.init_seed);
  enc_ = AtomEncoder::make(store_, "enc3", d, rng);
  rt0_ = ResTrans::make(store_, "env.rt0", d, rng);
  out_ = TriangleAttention::make(store_, "env.out", d, rng);
  in_ = TriangleAttention::make(store_, "env.in", d, rng);
  rt2_ = ResTrans::make(store_, "env.rt2", d, rng);
  w_out_ = Linear::make(store_, "env.w", d, d, rng, false);
  rt_vec_ = ResTrans::make(store_, "motif.rt_vec", d, rng);
  rt_env_ = ResTrans::make(store_, "motif.rt_env", d, rng);
  reduce_ = Reduce::make(store_, "motif.reduce", d, rng);
  motif_out_ = Linear::make(store_, "motif.out", d, d, rng);
  if (cfg_.zero_output) {
    w_out_.zero(store_);
    motif_out_.zero(store_);
  }
  for (const auto& e : vocab_.entries()) {
    GraphBatch b;
    b.add(e.motif.graph);
    motif_graphs_.push_back(std::move(b));
  }
}

void Model3D::init_encoder_from(const Model2D& m2) {
  if (m2.dim() != cfg_.d) throw Error("2D and 3D model dimensions differ");
  const auto& src = m2.store();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const auto& name = src.name(static_cast<int>(i));
    if (name.rfind("enc.", 0) != 0) continue;
    store_.value(store_.index("enc3." + name.substr(4))) = src.value(static_cast<int>(i));
  }
  invalidate_cache();
}

void Model3D::invalidate_cache() { cache_.reset(); }

double Model3D::logit_scale() const { return 1.0 / std::sqrt(static_cast<double>(cfg_.d)); }

Var Model3D::env_embeddings(Tape& t, Var X, const EnvBatch& envs) const {
  const std::size_t n = envs.node_rows.size();
  const std::size_t ne = envs.size();
  Var x0 = rt0_(t, gather_rows(X, envs.node_rows));
  Var x1 = x0;
  Var xa;
  if (envs.ta.empty()) {
    xa = gather_rows(x0, envs.center_node);
  } else {
    // outward: every hypernode feeds its terminal atom b'; the growth atom is
    // never terminal and keeps its row
    Var h = out_.hypernodes(t, x0, envs.ta, envs.tb, envs.tbp, envs.t);
    Var msg = out_.attend(t, gather_rows(x0, envs.tbp), h, envs.w, envs.tbp, n);
    std::vector<int> pick(n);
    for (std::size_t i = 0; i < n; ++i) pick[i] = static_cast<int>(i);
    for (int c : envs.center_node) pick[static_cast<std::size_t>(c)] = static_cast<int>(n) + c;
    const std::vector<Var> both{elu(add(x0, msg)), x0};
    x1 = gather_rows(concat_rows(both), pick);
    // inward: all hypernodes of an environment feed its growth atom
    Var h2 = in_.hypernodes(t, x1, envs.ta, envs.tb, envs.tbp, envs.t);
    Var msg2 = in_.attend(t, gather_rows(x1, envs.ta), h2, envs.w, envs.env_of, ne);
    Var xc = gather_rows(x1, envs.center_node);
    std::vector<char> has(ne, 0);
    for (int e : envs.env_of) has[static_cast<std::size_t>(e)] = 1;
    std::vector<int> pick2(ne);
    for (std::size_t e = 0; e < ne; ++e) pick2[e] = has[e] ? static_cast<int>(e) : static_cast<int>(ne + e);
    const std::vector<Var> both2{elu(add(xc, msg2)), xc};
    xa = gather_rows(concat_rows(both2), pick2);
  }
  return w_out_(t, rt2_(t, xa));
}

Var Model3D::motif_vectors(Tape& t, Var X, std::span<const int> attachment_rows, std::span<const int> member_rows,
                           std::span<const int> member_segment) const {
  Var xv = rt_vec_(t, gather_rows(X, attachment_rows));
  Var xe = reduce_(t, rt_env_(t, gather_rows(X, member_rows)), member_segment, attachment_rows.size());
  return motif_out_(t, add(xv, xe));
}

Matrix Model3D::motif_vectors_direct(std::span<const std::size_t> entries) const {
  Matrix out(entries.size(), cfg_.d);
  constexpr std::size_t kChunk = 256;
  for (std::size_t b = 0; b < entries.size(); b += kChunk) {
    const std::size_t e = std::min(entries.size(), b + kChunk);
    GraphBatch gb;
    std::vector<int> att, members, seg;
    for (std::size_t i = b; i < e; ++i) {
      const auto& g = motif_graphs_.at(entries[i]);
      const auto off = static_cast<int>(gb.append(g));
      att.push_back(off + vocab_.entry(entries[i]).motif.attachment);
      for (std::size_t k = 0; k < g.num_atoms(); ++k) {
        members.push_back(off + static_cast<int>(k));
        seg.push_back(static_cast<int>(i - b));
      }
    }
    Tape t(&store_);
    const Matrix& v = motif_vectors(t, enc_(t, gb), att, members, seg).value();
    std::copy(v.data.begin(), v.data.end(), out.row(b));
  }
  return out;
}

const Matrix& Model3D::motif_cache() const {
  return cache_.get([this] {
    std::vector<std::size_t> all(vocab_.size());
    std::iota(all.begin(), all.end(), 0);
    return motif_vectors_direct(all);
  });
}

namespace {

// Encoded-batch rows for one environment given where protein atoms and the
// core were placed.
std::vector<int> env_rows(const HyperEnv& env, const std::vector<int>& protein_row, int core_off) {
  std::vector<int> rows;
  rows.reserve(env.atoms.size());
  for (const auto& a : env.atoms) {
    if (a.protein) {
      const int r = protein_row[static_cast<std::size_t>(a.index)];
      if (r < 0) throw Error("env atom outside the protein crop");
      rows.push_back(r);
    } else {
      rows.push_back(core_off + a.index);
    }
  }
  return rows;
}

std::vector<int> add_crop(GraphBatch& gb, const MolGraph& protein, std::span<const int> crop) {
  std::vector<int> row(protein.num_atoms(), -1);
  const auto off = static_cast<int>(gb.add(protein, crop));
  for (std::size_t i = 0; i < crop.size(); ++i) row[static_cast<std::size_t>(crop[i])] = off + static_cast<int>(i);
  return row;
}

}  // namespace

Matrix Model3D::context_vector(const MolGraph& protein, const MolGraph& core, int atom) const {
  const auto env = build_hyperenv(protein, core, atom, cfg_.prior);
  const std::vector<Vec3> center{env.center_pos};
  const auto crop = crop_protein(protein, center, cfg_.prior.r_cut_protein, cfg_.crop_hops);
  GraphBatch gb;
  const auto prow = add_crop(gb, protein, crop);
  const int core_off = static_cast<int>(gb.add(core));
  EnvBatch eb;
  eb.add(env, core_off + atom, env_rows(env, prow, core_off));
  Tape t(&store_);
  return env_embeddings(t, enc_(t, gb), eb).value();
}

std::vector<double> Model3D::logits(const MolGraph& protein, const MolGraph& core, int atom) const {
  const Matrix u = context_vector(protein, core, atom);
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

std::vector<double> Model3D::r(const MolGraph& protein, const MolGraph& core, int atom) const {
  auto l = logits(protein, core, atom);
  for (auto& x : l) x = std::exp(x);
  return l;
}

double Model3D::alpha3(const std::string& key, const MolGraph& protein, const MolGraph& core, int atom) const {
  const auto i = vocab_.find(key);
  if (!i) throw Error("unknown motif key " + key);
  return sigmoid_value(logits(protein, core, atom)[*i]);
}

Checkpoint Model3D::to_checkpoint() const {
  Checkpoint c;
  c.meta["kind"] = "model3d";
  c.meta["d"] = cfg_.d;
  c.meta["crop_hops"] = cfg_.crop_hops;
  c.meta["prior"] = cfg_.prior.to_json();
  c.meta["policy_fingerprint"] = policy_fp_;
  c.meta["vocab_hash"] = vocab_.hash();
  c.meta["vocabulary"] = vocab_.to_json();
  c.tensors["model3d"] = store_.to_json();
  return c;
}

Model3D Model3D::from_checkpoint(const Checkpoint& c) {
  if (c.meta.value("kind", "") != "model3d") throw FingerprintError("checkpoint is not a 3D model");
  Vocabulary v = Vocabulary::from_json(c.meta.at("vocabulary"));
  if (v.hash() != c.meta.at("vocab_hash").get<std::string>())
    throw FingerprintError("checkpoint vocabulary does not match its recorded hash");
  Model3DConfig cfg;
  cfg.d = c.meta.at("d").get<std::size_t>();
  cfg.crop_hops = c.meta.at("crop_hops").get<int>();
  cfg.prior = PriorParams::from_json(c.meta.at("prior"));
  Model3D m(std::move(v), c.meta.at("policy_fingerprint").get<std::string>(), cfg);
  m.store_.load_json(c.tensors.at("model3d"));
  return m;
}

// ---- training -----------------------------------------------------------------------

Var loss_3d(const Model3D& m, Tape& t, std::span<const ContrastiveExample> examples) {
  GraphBatch gb;
  std::map<const Complex*, std::vector<int>> protein_rows;
  for (const auto& ex : examples) {
    if (!ex.complex) throw Error("3D example without a complex");
    const Complex* c = ex.complex.get();
    if (protein_rows.count(c)) continue;
    const auto lig = coordinates(c->ligand);
    const auto crop = crop_protein(c->protein, lig, m.prior().r_cut_protein, m.config().crop_hops);
    protein_rows[c] = add_crop(gb, c->protein, crop);
  }
  EnvBatch eb;
  for (const auto& ex : examples) {
    const auto core = place_core(ex.step, ex.complex->ligand);
    const auto env = build_hyperenv(ex.complex->protein, core, ex.step.growth_atom, m.prior());
    const int off = static_cast<int>(gb.add(core));
    eb.add(env, off + ex.step.growth_atom, env_rows(env, protein_rows.at(ex.complex.get()), off));
  }
  std::map<std::size_t, int> slot;
  std::vector<int> att, members, seg;
  auto motif_slot = [&](std::size_t i) {
    auto it = slot.find(i);
    if (it != slot.end()) return it->second;
    const int s = static_cast<int>(att.size());
    const auto& g = m.motif_graph(i);
    const int off = static_cast<int>(gb.append(g));
    att.push_back(off + m.vocabulary().entry(i).motif.attachment);
    for (std::size_t k = 0; k < g.num_atoms(); ++k) {
      members.push_back(off + static_cast<int>(k));
      seg.push_back(s);
    }
    return slot[i] = s;
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
  Var U = m.env_embeddings(t, X, eb);
  Var V = m.motif_vectors(t, X, att, members, seg);
  Var s = scale(rowwise_dot(gather_rows(U, pair_ctx), gather_rows(V, pair_motif)), m.logit_scale());
  return bce_with_logits(s, y, w);
}

std::vector<ContrastiveExample> complex_examples(const Complex& c, std::size_t unit, const BaselineModel& baseline,
                                                 const Vocabulary& vocab, const ShredPolicy& policy,
                                                 const NoiseConfig& noise, int k_neg, Rng& rng,
                                                 std::size_t* n_skipped) {
  auto aug = std::make_shared<const Complex>(augment_complex(c, noise, rng));
  const auto p = sample_pathway(aug->ligand, policy, rng);
  std::size_t unknown = 0;
  auto steps = steps_from_pathway(p, aug->ligand, vocab, &unknown);
  if (n_skipped) *n_skipped += unknown;
  std::vector<ContrastiveExample> out;
  for (auto& st : steps) {
    st.source = static_cast<int>(unit);
    st.complex_ref = c.id;
    ContrastiveExample ex;
    if (make_example(std::move(st), unit, baseline, k_neg, rng, ex)) {
      ex.complex = aug;
      out.push_back(std::move(ex));
    } else if (n_skipped) {
      ++*n_skipped;
    }
  }
  return out;
}

TrainReport train_3d(Model3D& m, std::span<const Complex> complexes, const Model2D& baseline,
                     const ShredPolicy& policy, const NoiseConfig& noise, const TrainConfig& cfg) {
  if (complexes.empty()) throw Error("no training complexes");
  if (policy.fingerprint() != m.policy_fingerprint() || baseline.policy_fingerprint() != m.policy_fingerprint())
    throw FingerprintError("shred policy differs between the 3D model, its baseline and the request");
  if (baseline.vocab_hash() != m.vocab_hash())
    throw FingerprintError("3D model vocabulary differs from the recalibrated baseline");
  for (const auto& c : complexes) {
    if (!c.ligand.has_coords() || !c.protein.has_coords()) throw Error("complex " + c.id + " lacks coordinates");
  }
  noise.validate();
  ContrastiveTask task = unit_task(
      complexes.size(),
      [&](std::size_t u, Rng& rng, std::size_t* skipped) {
        return complex_examples(complexes[u], u, baseline, m.vocabulary(), policy, noise, cfg.k_neg, rng, skipped);
      },
      cfg);
  task.loss = [&m](Tape& t, std::span<const ContrastiveExample> ex) { return loss_3d(m, t, ex); };
  task.on_update = [&m] { m.invalidate_cache(); };
  return run_contrastive(m.store(), task, cfg);
}

}  // namespace pqr
