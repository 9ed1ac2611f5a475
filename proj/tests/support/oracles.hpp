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

// Independent reference implementations used only by tests.

#include <utility>
#include <vector>

#include "pqr/molio.hpp"

namespace pqr::oracle {

/// Attribute-preserving graph isomorphism by backtracking. Compares element,
/// charge, H count, aromatic flag, radicals and bond orders. If `root_a` and
/// `root_b` are both >= 0 they must map onto each other.
bool isomorphic(const MolGraph& a, const MolGraph& b, int root_a = -1, int root_b = -1,
                bool compare_chirality = false);

/// Bonds lying on at least one simple cycle, found by exhaustive path search.
std::vector<bool> ring_bonds_brute_force(const MolGraph& g);

/// Relabels atoms: atom i of `g` becomes atom perm[i]. Bond order is shuffled too.
MolGraph permute(const MolGraph& g, const std::vector<int>& perm, Rng& rng);
std::vector<int> random_permutation(std::size_t n, Rng& rng);

/// Upper tail of the chi-square distribution (regularized upper incomplete gamma).
double chi2_sf(double x, double dof);
/// Pearson statistic of observed counts against expected probabilities;
/// cells with zero expectation are skipped. Returns {statistic, dof}.
std::pair<double, double> pearson_chi2(const std::vector<double>& observed, const std::vector<double>& probs);

/// AUC by counting all (positive, negative) pairs, ties 1/2.
double auc_pair_count(const std::vector<double>& pos, const std::vector<double>& neg);

/// Standard normal upper tail.
double normal_sf(double z);

}  // namespace pqr::oracle
