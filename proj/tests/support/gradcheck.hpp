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

// Central finite-difference check of tape gradients.

#include <cmath>
#include <functional>

#include "pqr/tensor.hpp"

namespace pqr::oracle {

struct GradCheck {
  double max_rel_err = 0.0;
  double max_abs_grad = 0.0;
  std::size_t n_checked = 0;
};

/// `f` builds a matrix-valued output from parameters of `store`. The scalar
/// probed is sum(out * R) for a fixed random R, so every output entry counts.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck gradcheck(ParameterStore& store, const std::function<Var(Tape&)>& f, double h = 1e-4,
                           double floor = 1e-3, std::uint64_t seed = 1234, std::size_t max_per_tensor = 0) {
  Matrix probe;
  auto scalar = [&](bool with_grad, Gradients* g) {
    Tape t(&store);
    Var out = f(t);
    if (probe.size() == 0) {
      Rng rng(seed);
      probe = Matrix(out.rows(), out.cols());
      for (auto& x : probe.data) x = uniform_real(rng, -1.0, 1.0);
    }
    Var loss = sum_all(mul(out, t.constant(probe)));
    if (with_grad) t.backward(loss, g);
    return loss.scalar();
  };
  Gradients g(store);
  scalar(true, &g);
  GradCheck r;
  for (std::size_t p = 0; p < store.size(); ++p) {
    auto& v = store.value(static_cast<int>(p)).data;
    const std::size_t n = max_per_tensor ? std::min(max_per_tensor, v.size()) : v.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = max_per_tensor ? (k * 7919) % v.size() : k;
      const double old = v[idx];
      v[idx] = old + h;
      const double fp = scalar(false, nullptr);
      v[idx] = old - h;
      const double fm = scalar(false, nullptr);
      v[idx] = old;
      const double num = (fp - fm) / (2 * h);
      const double ana = g.g[p].data[idx];
      const double rel = std::fabs(ana - num) / std::max({std::fabs(ana), std::fabs(num), floor});
      r.max_rel_err = std::max(r.max_rel_err, rel);
      r.max_abs_grad = std::max(r.max_abs_grad, std::fabs(ana));
      ++r.n_checked;
    }
  }
  return r;
}

}  // namespace pqr::oracle
