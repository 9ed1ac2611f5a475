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

// Mini-batch contrastive training shared by the 2D and 3D stages.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqr/recon.hpp"
#include "pqr/tensor.hpp"

namespace pqr {

class TrainingError : public Error {
 public:
  using Error::Error;
};

struct TrainConfig {
  int max_epochs = 40;
  int patience = 5;          // 0 disables early stopping
  int k_neg = 16;
  int batch_size = 64;       // units (molecules or complexes) per mini-batch
  int shards = 8;            // fixed gradient partition of each batch
  int workers = 1;
  double lr = 1e-4;
  double lr_decay = 1.0;     // per-epoch multiplicative factor
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  AdamConfig adam(int epoch) const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig defaults);
  static TrainConfig from_json(const nlohmann::json& j) { return from_json(j, TrainConfig()); }
};

/// One reconstruction step with its negatives and the baseline probability of
/// its ground truth. `unit` groups steps sharing a molecule or complex.
struct ContrastiveExample {
  std::size_t unit = 0;
  ReconstructionStep step;
  double p_truth_baseline = 0.0;
  std::shared_ptr<const Complex> complex;  // 3D stage only, already augmented
};

/// Samples negatives from `baseline` for `step` and fills `ex`. Returns false
/// when no valid negative exists (degenerate vocabulary).
bool make_example(ReconstructionStep step, std::size_t unit, const BaselineModel& baseline, int k, Rng& rng,
                  ContrastiveExample& ex);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::size_t n_train = 0;
  std::size_t n_skipped = 0;
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  bool early_stopped = false;
  nlohmann::json to_json() const;
};

struct ContrastiveTask {
  /// Mini-batches for an epoch, in update order.
  std::function<std::vector<std::vector<ContrastiveExample>>(int epoch, std::size_t* n_skipped)> batches;
  /// Fixed held-out examples; may be empty.
  std::vector<ContrastiveExample> validation;
  /// Summed weighted BCE of a contiguous run of examples.
  std::function<Var(Tape&, std::span<const ContrastiveExample>)> loss;
  /// Called after every parameter update.
  std::function<void()> on_update;
};

/// Examples of one unit (molecule or complex) for one epoch. Implementations
/// draw everything from `rng` and count dropped steps in `n_skipped`.
using UnitExamples = std::function<std::vector<ContrastiveExample>(std::size_t unit, Rng& rng, std::size_t* n_skipped)>;

/// Seeded holdout split of n_units; validation examples are drawn once, the
/// training units are reshuffled and regenerated every epoch.
ContrastiveTask unit_task(std::size_t n_units, UnitExamples source, const TrainConfig& cfg);

/// Splits `examples` into `shards` contiguous parts, evaluates them on up to
/// `workers` threads and sums the shard gradients in shard order, so the
/// result does not depend on the number of workers. Returns the summed loss.
double shard_gradients(const ParameterStore& store, std::span<const ContrastiveExample> examples, int shards,
                       int workers, const std::function<Var(Tape&, std::span<const ContrastiveExample>)>& loss,
                       Gradients* out);

/// Adam over the task's batches with per-step mean loss; keeps the parameters
/// of the best validation epoch when validation data exists.
TrainReport run_contrastive(ParameterStore& store, ContrastiveTask& task, const TrainConfig& cfg);

/// Deterministic split of n units into (train, holdout) by a seeded shuffle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_units(std::size_t n, double holdout_fraction,
                                                                           std::uint64_t seed);

}  // namespace pqr
