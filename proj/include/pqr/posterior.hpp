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

// Factorized motif posterior p*q*r: views, normalization, sampling, entropy
// and the 2D score kernel.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqr/gnn3d.hpp"

namespace pqr {

/// Which factors enter the posterior. Q alone is used by the entropy report.
enum class View { P, Q, PQ, QR, PQR };

std::string to_string(View v);
View parse_view(const std::string& s);  // case-insensitive; throws Error
bool uses_q(View v);
bool uses_r(View v);

struct PosteriorRow {
  std::size_t index = 0;  // vocabulary index
  std::string key;
  std::string smiles;
  double p = 0.0;
  double q = 1.0;
  double r = 1.0;
  double q_hat = 1.0;
  double r_hat = 1.0;
  double prob = 0.0;
};

/// Optional thresholded submodel: keep only the top_n motifs by p*q, or
/// those with p*q >= min_pq. Suppressed motifs get prob 0.
struct ViewFilter {
  std::size_t top_n = 0;
  double min_pq = 0.0;
};

struct Posterior {
  View view = View::P;
  double z2 = 1.0;
  double z3 = 1.0;
  std::vector<PosteriorRow> rows;  // vocabulary order

  std::vector<double> probabilities() const;
  /// Row indices by descending prob, ties by vocabulary index.
  std::vector<std::size_t> ranking() const;
  /// Table sorted by prob; top = 0 keeps all rows.
  nlohmann::json to_json(std::size_t top = 0) const;
};

/// Pure assembly from factor columns. `r` may be empty (factor 1).
Posterior assemble_factors(const Vocabulary& vocab, std::span<const double> q, std::span<const double> r, View view,
                           const ViewFilter& filter = {});

/// Posterior at growth atom `atom` of `core`. `protein` and `m3` are required
/// for views with R; the core must then carry coordinates.
Posterior assemble(const MolGraph& core, int atom, const MolGraph* protein, const Model2D& m2, const Model3D* m3,
                   View view, const ViewFilter& filter = {});

std::size_t sample(const Posterior& post, Rng& rng);

/// Shannon entropy divided by log |V|; 0 for a one-motif vocabulary.
double normalized_entropy(std::span<const double> prob);
double entropy(const Posterior& post);

/// Held-out reconstruction step, with its (unperturbed) complex when 3D.
struct TestStep {
  ReconstructionStep step;
  std::shared_ptr<const Complex> complex;

  /// Core with coordinates from the complex ligand; throws without a complex.
  MolGraph placed_core() const;
};

struct EntropyRow {
  double h_q = 1.0, h_qr = 1.0, h_pqr = 1.0;
  double d_q = 0.0, d_r = 0.0, d_p = 0.0;  // h_q - 1, h_qr - h_q, h_pqr - h_qr
};

struct EntropyShiftReport {
  std::vector<EntropyRow> rows;
  nlohmann::json summary() const;  // means and 20-bin histograms on [-1, 1]
  std::string to_csv() const;
};

EntropyShiftReport entropy_shift_report(std::span<const TestStep> steps, const Model2D& m2, const Model3D& m3);

struct KernelMatrix {
  std::vector<std::string> keys;
  Matrix k;
  Matrix d;
  std::vector<std::size_t> floored;  // motifs whose variance hit the floor
  std::string to_csv(bool distance) const;
};

struct GrowthContext {
  MolGraph core;
  int atom = 0;
};

/// Cross-correlation of per-motif whitened alpha2 scores over N >= 2 contexts.
KernelMatrix score_kernel(const Model2D& m2, std::span<const GrowthContext> contexts, double var_floor = 1e-12);

}  // namespace pqr
