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

// Staged training and evaluation driver over an artifact directory.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqr/eval.hpp"

namespace pqr {

struct EvalConfig {
  int k_neg = 8;
  double test_fraction = 0.2;  // share of family tags held out
  SplitSpec split;
  std::size_t kernel_contexts = 200;
};

/// Declarative pipeline configuration (JSON). Relative paths resolve
/// against the directory of the config file.
struct PipelineConfig {
  std::string corpus;     // SMILES corpus for the 1D and 2D stages
  std::string complexes;  // JSON-lines complexes for recalibration and 3D
  std::string out = "run";
  std::uint64_t seed = 0;
  int workers = 1;
  ShredPolicy shred;
  int vocab_shreds = 4;   // shreddings per molecule when counting motifs
  std::size_t d = 64;
  TrainConfig train_2d;
  TrainConfig recalibrate;
  TrainConfig train_3d;
  NoiseConfig noise;
  PriorParams prior;
  EvalConfig eval;

  PipelineConfig();
  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static PipelineConfig load(const std::string& path);
  /// Hash of everything that influences results (not out or workers).
  std::string hash() const;
  /// Master seed and worker count pushed into every stage.
  void apply_overrides(std::optional<std::uint64_t> seed, std::optional<int> workers);
};

/// Hex digest of a file's bytes.
std::string file_fingerprint(const std::string& path);

/// Writes {"kind", "config_hash", "inputs", "payload"} to `path`.
void write_artifact(const std::string& path, const std::string& kind, const std::string& config_hash,
                    const std::map<std::string, std::string>& inputs, const nlohmann::json& payload);
/// Reads an artifact of `kind`; throws FingerprintError on a kind mismatch.
nlohmann::json read_artifact(const std::string& path, const std::string& kind);

class Pipeline {
 public:
  using Log = std::function<void(const std::string&)>;

  explicit Pipeline(PipelineConfig cfg, Log log = {});

  const PipelineConfig& config() const { return cfg_; }
  std::string path(const std::string& name) const;

  void build_vocab();
  void train_2d();
  void recalibrate();
  /// `baseline` overrides the recalibrated 2D checkpoint path.
  void train_3d(const std::string& baseline = "");
  nlohmann::json evaluate();
  nlohmann::json report();
  void kernel();
  /// All stages in order; returns the evaluation summary.
  nlohmann::json run_all();

  // Loaders that verify the recorded inputs of each artifact.
  Vocabulary load_vocab(const std::string& which) const;  // "a" or "b"
  Model2D load_model2d(bool recalibrated) const;
  Model3D load_model3d() const;
  std::vector<Complex> load_split(bool test) const;

 private:
  PipelineConfig cfg_;
  Log log_;
  std::vector<MolGraph> corpus_;
  std::vector<Complex> complexes_;
  bool loaded_ = false;

  void load_inputs();
  void note(const std::string& msg) const;
  std::vector<TestStep> test_steps() const;
};

/// 3x3 AUC table of an evaluation summary.
std::string auc_table(const nlohmann::json& summary);

/// Bundled fixtures: drug-like corpus, synthetic complexes, planted corpora
/// and a pipeline config, written into `dir`.
struct FixtureSpec {
  std::size_t n_molecules = 500;
  std::size_t n_complexes = 50;
  std::size_t n_shift = 300;
  std::size_t n_planted3d = 160;
  std::uint64_t seed = 7;
};
std::vector<std::string> write_fixtures(const std::string& dir, const FixtureSpec& spec = {});

}  // namespace pqr
