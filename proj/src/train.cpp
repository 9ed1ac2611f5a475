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
#include <cstdio>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "pqr/train.hpp"

namespace pqr {

using nlohmann::json;

void TrainConfig::validate() const {
  if (max_epochs < 0) throw Error("max_epochs must be >= 0");
  if (patience < 0) throw Error("patience must be >= 0");
  if (k_neg < 1) throw Error("k_neg must be >= 1");
  if (batch_size < 1) throw Error("batch_size must be >= 1");
  if (shards < 1) throw Error("shards must be >= 1");
  if (workers < 1) throw Error("workers must be >= 1");
  if (!(lr > 0.0)) throw Error("lr must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("lr_decay must be in (0, 1]");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw Error("holdout_fraction must be in [0, 1)");
}

AdamConfig TrainConfig::adam(int epoch) const {
  AdamConfig a;
  a.lr = lr * std::pow(lr_decay, epoch);
  return a;
}

json TrainConfig::to_json() const {
  return {{"max_epochs", max_epochs}, {"patience", patience},     {"k_neg", k_neg},
          {"batch_size", batch_size}, {"shards", shards},         {"lr", lr},
          {"lr_decay", lr_decay},     {"holdout_fraction", holdout_fraction}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k == "max_epochs") c.max_epochs = it->get<int>();
    else if (k == "patience") c.patience = it->get<int>();
    else if (k == "k_neg") c.k_neg = it->get<int>();
    else if (k == "batch_size") c.batch_size = it->get<int>();
    else if (k == "shards") c.shards = it->get<int>();
    else if (k == "workers") c.workers = it->get<int>();
    else if (k == "lr") c.lr = it->get<double>();
    else if (k == "lr_decay") c.lr_decay = it->get<double>();
    else if (k == "holdout_fraction") c.holdout_fraction = it->get<double>();
    else if (k == "seed") c.seed = it->get<std::uint64_t>();
    else throw Error("unknown training option '" + k + "'");
  }
  c.validate();
  return c;
}

json TrainReport::to_json() const {
  json e = json::array();
  for (const auto& l : epochs)
    e.push_back({{"epoch", l.epoch}, {"train_loss", l.train_loss}, {"val_loss", l.val_loss},
                 {"n_train", l.n_train}, {"n_skipped", l.n_skipped}});
  return {{"epochs", e}, {"best_epoch", best_epoch}, {"early_stopped", early_stopped}};
}

bool make_example(ReconstructionStep step, std::size_t unit, const BaselineModel& baseline, int k, Rng& rng,
                  ContrastiveExample& ex) {
  const auto w = baseline.weights(step);
  if (step.true_index >= w.size()) throw Error("baseline/vocabulary mismatch");
  double total = 0.0;
  for (double x : w) total += std::max(0.0, x);
  auto neg = sample_negatives_from(w, step.true_index, k, rng);
  if (neg.empty()) return false;
  step.negatives = std::move(neg);
  ex.unit = unit;
  ex.p_truth_baseline = std::max(0.0, w[step.true_index]) / total;
  ex.step = std::move(step);
  return true;
}

double shard_gradients(const ParameterStore& store, std::span<const ContrastiveExample> examples, int shards,
                       int workers, const std::function<Var(Tape&, std::span<const ContrastiveExample>)>& loss,
                       Gradients* out) {
  const std::size_t n = examples.size();
  const std::size_t s = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(shards), n));
  std::vector<Gradients> grads(s);
  std::vector<double> losses(s, 0.0);
  std::vector<std::exception_ptr> errors(s);
  auto run = [&](std::size_t i) {
    try {
      const std::size_t b = n * i / s, e = n * (i + 1) / s;
      Tape tape(&store);
      Var l = loss(tape, examples.subspan(b, e - b));
      losses[i] = l.scalar();
      if (out) {
        grads[i] = Gradients(store);
        tape.backward(l, &grads[i]);
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t w = std::min<std::size_t>(s, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < s; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < s; i += w) run(i);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  double total = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    total += losses[i];
    if (out) out->add(grads[i]);
  }
  return total;
}

namespace {

double mean_loss(const ParameterStore& store, ContrastiveTask& task, const TrainConfig& cfg) {
  if (task.validation.empty()) return 0.0;
  const double l = shard_gradients(store, task.validation, cfg.shards, cfg.workers, task.loss, nullptr);
  return l / static_cast<double>(task.validation.size());
}

}  // namespace

TrainReport run_contrastive(ParameterStore& store, ContrastiveTask& task, const TrainConfig& cfg) {
  cfg.validate();
  TrainReport rep;
  AdamState adam = adam_init(store);
  const bool track_best = !task.validation.empty();
  double best = std::numeric_limits<double>::infinity();
  json best_params;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    const auto batches = task.batches(epoch, &log.n_skipped);
    double sum = 0.0;
    for (const auto& batch : batches) {
      if (batch.empty()) continue;
      Gradients g(store);
      const double l = shard_gradients(store, batch, cfg.shards, cfg.workers, task.loss, &g);
      if (!std::isfinite(l)) throw TrainingError("training diverged: non-finite loss in epoch " + std::to_string(epoch));
      g.scale(1.0 / static_cast<double>(batch.size()));
      adam_step(store, g, adam, cfg.adam(epoch));
      if (task.on_update) task.on_update();
      sum += l;
      log.n_train += batch.size();
    }
    log.train_loss = log.n_train ? sum / static_cast<double>(log.n_train) : 0.0;
    log.val_loss = mean_loss(store, task, cfg);
    if (!std::isfinite(log.val_loss)) throw TrainingError("training diverged: non-finite validation loss");
    rep.epochs.push_back(log);
    if (track_best) {
      if (log.val_loss < best) {
        best = log.val_loss;
        best_params = store.to_json();
        rep.best_epoch = epoch;
        since_best = 0;
      } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
        rep.early_stopped = true;
        break;
      }
    }
  }
  if (track_best && !best_params.is_null()) {
    store.load_json(best_params);
    if (task.on_update) task.on_update();
  } else if (!rep.epochs.empty()) {
    rep.best_epoch = rep.epochs.back().epoch;
  }
  return rep;
}

ContrastiveTask unit_task(std::size_t n_units, UnitExamples source, const TrainConfig& cfg) {
  cfg.validate();
  const auto [train, hold] = split_units(n_units, cfg.holdout_fraction, cfg.seed);
  ContrastiveTask task;
  std::size_t ignored = 0;
  for (auto u : hold) {
    Rng rng(derive_seed(derive_seed(cfg.seed, 0xa11d), u));
    for (auto& ex : source(u, rng, &ignored)) task.validation.push_back(std::move(ex));
  }
  task.batches = [source = std::move(source), train = train, cfg](int epoch, std::size_t* skipped) {
    const std::uint64_t es = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1);
    std::vector<std::size_t> order = train;
    Rng shuf(derive_seed(es, 0x5f));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuf, i)]);
    std::vector<std::vector<ContrastiveExample>> out;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t b = 0; b < order.size(); b += bs) {
      std::vector<ContrastiveExample> batch;
      for (std::size_t i = b; i < std::min(order.size(), b + bs); ++i) {
        Rng rng(derive_seed(es, order[i]));
        for (auto& ex : source(order[i], rng, skipped)) batch.push_back(std::move(ex));
      }
      out.push_back(std::move(batch));
    }
    return out;
  };
  return task;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_units(std::size_t n, double holdout_fraction,
                                                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x5117));
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(rng, i)]);
  const auto n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  std::vector<std::size_t> hold(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());
  return {train, hold};
}

}  // namespace pqr
