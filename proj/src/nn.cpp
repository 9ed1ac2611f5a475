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

#include "pqr/nn.hpp"

namespace pqr {

Linear Linear::make(ParameterStore& s, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
                    bool bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.w = s.add(name + ".w", ParameterStore::glorot(in, out, rng));
  if (bias) l.b = s.add(name + ".b", Matrix(1, out));
  return l;
}

Var Linear::operator()(Tape& t, Var x) const {
  Var y = matmul(x, t.param(w));
  return b >= 0 ? add_row(y, t.param(b)) : y;
}

void Linear::zero(ParameterStore& s) const {
  s.value(w).fill(0.0);
  if (b >= 0) s.value(b).fill(0.0);
}

Gru Gru::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  Gru g;
  g.wr = Linear::make(s, name + ".wr", d, d, rng);
  g.ur = Linear::make(s, name + ".ur", d, d, rng, false);
  g.ws = Linear::make(s, name + ".ws", d, d, rng);
  g.us = Linear::make(s, name + ".us", d, d, rng, false);
  g.wt = Linear::make(s, name + ".wt", d, d, rng);
  g.ut = Linear::make(s, name + ".ut", d, d, rng, false);
  return g;
}

Var Gru::operator()(Tape& t, Var h, Var x) const {
  Var r = sigmoid(add(wr(t, h), ur(t, x)));
  Var s = sigmoid(add(ws(t, h), us(t, x)));
  Var c = tanh(add(wt(t, h), mul(r, ut(t, x))));
  return add(mul(one_minus(s), c), mul(s, x));
}

ResTrans ResTrans::make(ParameterStore& s, const std::string& name, std::size_t d, Rng& rng) {
  return ResTrans{Linear::make(s, name + ".l1", d, d, rng), Linear::make(s, name + ".l2", d, d, rng)};
}

Var ResTrans::operator()(Tape& t, Var x) const {
  Var h = elu(l1(t, x));
  return elu(add(x, l2(t, layer_norm(h))));
}

}  // namespace pqr
