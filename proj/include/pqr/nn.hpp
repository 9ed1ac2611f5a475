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

// Small layers built from tensor ops.

#include <string>

#include "pqr/tensor.hpp"

namespace pqr {

struct Linear {
  int w = -1;
  int b = -1;  // -1 when built without bias
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear make(ParameterStore& s, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                     bool bias = true);
  Var operator()(Tape& t, Var x) const;
  void zero(ParameterStore& s) const;
};

/// Gated recurrent update of a previous state by a new message:
///   r = sig(Wr h + Ur x + br), s = sig(Ws h + Us x + bs),
///   t = tanh(Wt h + bt + r * (Ut x)), out = (1 - s) * t + s * x.
struct Gru {
  Linear wr, ur, ws, us, wt, ut;

  static Gru make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  Var operator()(Tape& t, Var h, Var x_prev) const;
};

/// Residual transition: x' = ELU(Lin1 x); out = ELU(x + Lin2 LayerNorm(x')).
struct ResTrans {
  Linear l1, l2;

  static ResTrans make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng);
  Var operator()(Tape& t, Var x) const;
};

}  // namespace pqr
