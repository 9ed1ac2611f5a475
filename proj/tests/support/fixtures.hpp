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

// Small shared inputs for the unit tests.

#include <string>
#include <vector>

#include "pqr/molio.hpp"

namespace pqr::fixture {

inline std::string data_path(const std::string& name) { return std::string(PQR_TEST_DATA_DIR) + "/" + name; }

/// First n connected molecules of the bundled corpus with at least 8 atoms.
inline std::vector<MolGraph> small_corpus(std::size_t n) {
  std::vector<MolGraph> out;
  for (auto& g : read_smiles_corpus(data_path("corpus100.smi"))) {
    int nc = 0;
    connected_components(g, &nc);
    if (nc == 1 && g.num_atoms() >= 8) out.push_back(std::move(g));
    if (out.size() == n) break;
  }
  return out;
}

}  // namespace pqr::fixture
