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

// Baseline-relative ROC evaluation, null metrics and close/far splits.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pqr/posterior.hpp"

namespace pqr {

struct RocResult {
  double auc = 0.5;
  double stderr_auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_skipped = 0;  // steps whose baseline had no alternative to the truth
  std::vector<std::pair<double, double>> curve;  // (fpr, tpr) from (0,0) to (1,1)

  nlohmann::json to_json() const;
  std::string curve_csv() const;
};

/// Mann-Whitney AUC, ties counted 1/2.
double mann_whitney_auc(std::span<const double> pos, std::span<const double> neg);
/// Hanley-McNeil standard error.
double hanley_mcneil_stderr(double auc, std::size_t n_pos, std::size_t n_neg);
RocResult roc_from_scores(std::span<const double> pos, std::span<const double> neg);

/// Normalized motif distribution of one of the generative levels
/// G_0, G_p, G_pq, G_pqr. Non-owning.
class LevelModel {
 public:
  static LevelModel uniform(const Vocabulary& v);
  static LevelModel frequency(const Vocabulary& v);
  static LevelModel two_d(const Model2D& m2);
  static LevelModel three_d(const Model2D& m2, const Model3D& m3);

  int level() const { return level_; }
  std::string name() const;  // 0D, 1D, 2D, 3D
  const Vocabulary& vocabulary() const { return *vocab_; }
  std::vector<double> distribution(const TestStep& s) const;

 private:
  int level_ = 0;
  const Vocabulary* vocab_ = nullptr;
  const Model2D* m2_ = nullptr;
  const Model3D* m3_ = nullptr;
};

std::vector<std::vector<double>> level_distributions(const LevelModel& m, std::span<const TestStep> steps);

/// Scores are P_model(v)/P_baseline(v); positives are the true motifs, the
/// k_neg negatives per step are drawn from the baseline rejecting the truth.
RocResult roc_from_distributions(std::span<const std::vector<double>> model,
                                 std::span<const std::vector<double>> baseline, std::span<const TestStep> steps,
                                 int k_neg, Rng& rng);
RocResult roc_vs_baseline(const LevelModel& model, const LevelModel& baseline, std::span<const TestStep> steps,
                          int k_neg, Rng& rng);

struct NullMetrics {
  RocResult auc_p_over_0;
  double top1_static = 0.0, top8_static = 0.0;
  double top1_sampled = 0.0, top8_sampled = 0.0;  // expected hit rate of k draws from p
  nlohmann::json to_json() const;
};

NullMetrics null_metrics(const Vocabulary& vocab, std::span<const TestStep> steps, int k_neg, Rng& rng);

struct SplitSpec {
  double close_cut = 3.5;
  double far_cut = 4.5;
  void validate() const;
};

struct CloseFarSplit {
  std::vector<std::size_t> close, far, neither;
};

/// Distance from the true motif's atoms (in the source ligand pose) to the
/// nearest protein atom decides the class.
double motif_protein_distance(const TestStep& s);
CloseFarSplit close_far_split(std::span<const TestStep> steps, const SplitSpec& spec = {});

/// Fraction of steps on which each motif key is the top-1 proposal of the
/// model's PQ posterior (ties to the lower vocabulary index).
std::map<std::string, double> top1_marginal(const Model2D& m, std::span<const TestStep> steps);
/// KL(marginal || vocabulary frequencies) over the union of keys, both sides
/// smoothed by eps and renormalized.
double smoothed_kl(const std::map<std::string, double>& marginal, const Vocabulary& vocab, double eps = 1e-3);

/// One sampled pathway per molecule or complex; steps with unknown motifs
/// are dropped.
std::vector<TestStep> test_steps_from_corpus(std::span<const MolGraph> mols, const Vocabulary& vocab,
                                             const ShredPolicy& policy, std::uint64_t seed);
std::vector<TestStep> test_steps_from_complexes(std::span<const Complex> complexes, const Vocabulary& vocab,
                                                const ShredPolicy& policy, std::uint64_t seed);

template <class T>
std::vector<T> subset(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

}  // namespace pqr
