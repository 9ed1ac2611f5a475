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

#include "pqr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace pqr {

nlohmann::json RocResult::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& [f, t] : curve) c.push_back({f, t});
  return {{"auc", auc}, {"stderr", stderr_auc}, {"n_pos", n_pos}, {"n_neg", n_neg}, {"n_skipped", n_skipped},
          {"curve", c}};
}

std::string RocResult::curve_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "fpr,tpr\n";
  for (const auto& [f, t] : curve) os << f << ',' << t << '\n';
  return os.str();
}

double mann_whitney_auc(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) throw Error("AUC needs positives and negatives");
  // rank-sum over the pooled sample with mid-ranks for ties
  std::vector<std::pair<double, int>> all;
  all.reserve(pos.size() + neg.size());
  for (double s : pos) all.emplace_back(s, 1);
  for (double s : neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    std::size_t np = 0;
    while (j < all.size() && all[j].first == all[i].first) np += static_cast<std::size_t>(all[j++].second);
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    rank_sum += mid * static_cast<double>(np);
    i = j;
  }
  const double n1 = static_cast<double>(pos.size()), n0 = static_cast<double>(neg.size());
  return (rank_sum - n1 * (n1 + 1) / 2) / (n1 * n0);
}

double hanley_mcneil_stderr(double a, std::size_t n_pos, std::size_t n_neg) {
  const double q1 = a / (2 - a), q2 = 2 * a * a / (1 + a);
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double v = (a * (1 - a) + (np - 1) * (q1 - a * a) + (nn - 1) * (q2 - a * a)) / (np * nn);
  return std::sqrt(std::max(v, 0.0));
}

RocResult roc_from_scores(std::span<const double> pos, std::span<const double> neg) {
  RocResult r;
  r.n_pos = pos.size();
  r.n_neg = neg.size();
  r.auc = mann_whitney_auc(pos, neg);
  r.stderr_auc = hanley_mcneil_stderr(r.auc, r.n_pos, r.n_neg);
  std::vector<std::pair<double, int>> all;
  for (double s : pos) all.emplace_back(s, 1);
  for (double s : neg) all.emplace_back(s, 0);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double tp = 0, fp = 0;
  r.curve.emplace_back(0.0, 0.0);
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? tp : fp) += 1;
      ++j;
    }
    r.curve.emplace_back(fp / static_cast<double>(r.n_neg), tp / static_cast<double>(r.n_pos));
    i = j;
  }
  return r;
}

LevelModel LevelModel::uniform(const Vocabulary& v) {
  LevelModel m;
  m.level_ = 0;
  m.vocab_ = &v;
  return m;
}

LevelModel LevelModel::frequency(const Vocabulary& v) {
  LevelModel m;
  m.level_ = 1;
  m.vocab_ = &v;
  return m;
}

LevelModel LevelModel::two_d(const Model2D& m2) {
  LevelModel m;
  m.level_ = 2;
  m.vocab_ = &m2.vocabulary();
  m.m2_ = &m2;
  return m;
}

LevelModel LevelModel::three_d(const Model2D& m2, const Model3D& m3) {
  if (m2.vocab_hash() != m3.vocab_hash()) throw FingerprintError("2D and 3D models use different vocabularies");
  LevelModel m;
  m.level_ = 3;
  m.vocab_ = &m2.vocabulary();
  m.m2_ = &m2;
  m.m3_ = &m3;
  return m;
}

std::string LevelModel::name() const { return std::to_string(level_) + "D"; }

std::vector<double> LevelModel::distribution(const TestStep& s) const {
  const std::size_t n = vocab_->size();
  switch (level_) {
    case 0: return std::vector<double>(n, 1.0 / static_cast<double>(n));
    case 1: return vocab_->probabilities();
    case 2: return assemble(s.step.core, s.step.growth_atom, nullptr, *m2_, nullptr, View::PQ).probabilities();
    default: {
      if (!s.complex) throw Error("3D evaluation needs complex-backed steps");
      const MolGraph core = s.placed_core();
      return assemble(core, s.step.growth_atom, &s.complex->protein, *m2_, m3_, View::PQR).probabilities();
    }
  }
}

std::vector<std::vector<double>> level_distributions(const LevelModel& m, std::span<const TestStep> steps) {
  std::vector<std::vector<double>> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(m.distribution(s));
  return out;
}

RocResult roc_from_distributions(std::span<const std::vector<double>> model,
                                 std::span<const std::vector<double>> baseline, std::span<const TestStep> steps,
                                 int k_neg, Rng& rng) {
  if (steps.empty()) throw Error("no evaluation steps");
  if (model.size() != steps.size() || baseline.size() != steps.size()) throw Error("distribution count mismatch");
  if (k_neg < 1) throw Error("k_neg must be >= 1");
  std::vector<double> pos, neg;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& pm = model[i];
    const auto& pb = baseline[i];
    const std::size_t t = steps[i].step.true_index;
    const auto negs = sample_negatives_from(pb, t, k_neg, rng);
    if (negs.empty()) {
      ++skipped;
      continue;
    }
    auto score = [&](std::size_t v) {
      if (pb[v] <= 0.0) return pm[v] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
      return pm[v] / pb[v];
    };
    pos.push_back(score(t));
    for (std::size_t v : negs) neg.push_back(score(v));
  }
  if (pos.empty()) throw Error("every evaluation step was degenerate");
  RocResult r = roc_from_scores(pos, neg);
  r.n_skipped = skipped;
  return r;
}

RocResult roc_vs_baseline(const LevelModel& model, const LevelModel& baseline, std::span<const TestStep> steps,
                          int k_neg, Rng& rng) {
  if (model.vocabulary().hash() != baseline.vocabulary().hash())
    throw FingerprintError("model and baseline use different vocabularies");
  const auto pm = level_distributions(model, steps);
  const auto pb = level_distributions(baseline, steps);
  return roc_from_distributions(pm, pb, steps, k_neg, rng);
}

nlohmann::json NullMetrics::to_json() const {
  return {{"auc_p_over_0", auc_p_over_0.auc},
          {"auc_stderr", auc_p_over_0.stderr_auc},
          {"top1_static", top1_static},
          {"top8_static", top8_static},
          {"top1_sampled", top1_sampled},
          {"top8_sampled", top8_sampled}};
}

NullMetrics null_metrics(const Vocabulary& vocab, std::span<const TestStep> steps, int k_neg, Rng& rng) {
  if (steps.empty()) throw Error("no evaluation steps");
  NullMetrics m;
  const auto p = vocab.probabilities();
  const std::vector<std::vector<double>> pm(steps.size(), p);
  const std::vector<std::vector<double>> p0(steps.size(), std::vector<double>(p.size(), 1.0 / p.size()));
  m.auc_p_over_0 = roc_from_distributions(pm, p0, steps, k_neg, rng);
  // entries are stored by descending count, so the static rank is the index
  for (const auto& s : steps) {
    const std::size_t t = s.step.true_index;
    m.top1_static += t < 1 ? 1.0 : 0.0;
    m.top8_static += t < 8 ? 1.0 : 0.0;
    m.top1_sampled += p[t];
    m.top8_sampled += 1.0 - std::pow(1.0 - p[t], 8);
  }
  const double n = static_cast<double>(steps.size());
  m.top1_static /= n;
  m.top8_static /= n;
  m.top1_sampled /= n;
  m.top8_sampled /= n;
  return m;
}

void SplitSpec::validate() const {
  if (!(close_cut > 0.0) || !(close_cut < far_cut)) throw Error("split cuts need 0 < close_cut < far_cut");
}

double motif_protein_distance(const TestStep& s) {
  if (!s.complex) throw Error("close/far split needs complex-backed steps");
  if (s.step.motif_parent_atoms.empty()) throw Error("step has no motif pose");
  double best = std::numeric_limits<double>::infinity();
  const auto& lig = s.complex->ligand;
  const auto& prot = s.complex->protein;
  for (int a : s.step.motif_parent_atoms) {
    const auto& pa = lig.atom(a).coords;
    if (!pa) throw Error("missing ligand pose");
    for (const auto& b : prot.atoms()) {
      if (!b.coords) throw Error("missing protein pose");
      if (b.atomic_number == 1) continue;
      best = std::min(best, distance(*pa, *b.coords));
    }
  }
  return best;
}

CloseFarSplit close_far_split(std::span<const TestStep> steps, const SplitSpec& spec) {
  spec.validate();
  CloseFarSplit out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double d = motif_protein_distance(steps[i]);
    if (d <= spec.close_cut) out.close.push_back(i);
    else if (d >= spec.far_cut) out.far.push_back(i);
    else out.neither.push_back(i);
  }
  return out;
}

std::map<std::string, double> top1_marginal(const Model2D& m, std::span<const TestStep> steps) {
  if (steps.empty()) throw Error("no steps for the marginal");
  std::map<std::string, double> out;
  for (const auto& s : steps) {
    const auto post = assemble(s.step.core, s.step.growth_atom, nullptr, m, nullptr, View::PQ);
    out[post.rows[post.ranking().front()].key] += 1.0;
  }
  for (auto& [k, v] : out) v /= static_cast<double>(steps.size());
  return out;
}

double smoothed_kl(const std::map<std::string, double>& marginal, const Vocabulary& vocab, double eps) {
  std::map<std::string, std::pair<double, double>> u;
  for (const auto& [k, v] : marginal) u[k].first = v;
  for (std::size_t i = 0; i < vocab.size(); ++i) u[vocab.entry(i).key].second = vocab.p1d(i);
  double za = 0.0, zb = 0.0;
  for (const auto& [k, ab] : u) {
    za += ab.first + eps;
    zb += ab.second + eps;
  }
  double kl = 0.0;
  for (const auto& [k, ab] : u) {
    const double a = (ab.first + eps) / za, b = (ab.second + eps) / zb;
    kl += a * std::log(a / b);
  }
  return kl;
}

std::vector<TestStep> test_steps_from_corpus(std::span<const MolGraph> mols, const Vocabulary& vocab,
                                             const ShredPolicy& policy, std::uint64_t seed) {
  std::vector<TestStep> out;
  for (std::size_t i = 0; i < mols.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    const auto p = sample_pathway(mols[i], policy, rng);
    for (auto& st : steps_from_pathway(p, mols[i], vocab)) {
      st.source = static_cast<int>(i);
      out.push_back({std::move(st), nullptr});
    }
  }
  return out;
}

std::vector<TestStep> test_steps_from_complexes(std::span<const Complex> complexes, const Vocabulary& vocab,
                                                const ShredPolicy& policy, std::uint64_t seed) {
  std::vector<TestStep> out;
  for (std::size_t i = 0; i < complexes.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    auto c = std::make_shared<const Complex>(complexes[i]);
    const auto p = sample_pathway(c->ligand, policy, rng);
    for (auto& st : steps_from_pathway(p, c->ligand, vocab)) {
      st.source = static_cast<int>(i);
      st.complex_ref = c->id;
      out.push_back({std::move(st), c});
    }
  }
  return out;
}

}  // namespace pqr
