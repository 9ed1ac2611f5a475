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
#include <fstream>

#include "pqr/tensor.hpp"

namespace pqr {

using nlohmann::json;

Matrix Matrix::from(std::size_t r, std::size_t c, std::vector<double> values) {
  if (values.size() != r * c) throw ShapeError("Matrix::from: size mismatch");
  Matrix m;
  m.rows = r;
  m.cols = c;
  m.data = std::move(values);
  return m;
}

// ---- parameters -------------------------------------------------------------

int ParameterStore::add(const std::string& name, Matrix value) {
  if (by_name_.count(name)) throw Error("duplicate parameter '" + name + "'");
  const int i = static_cast<int>(values_.size());
  names_.push_back(name);
  values_.push_back(std::move(value));
  by_name_[name] = i;
  return i;
}

int ParameterStore::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw Error("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Matrix ParameterStore::glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Matrix m(fan_in, fan_out);
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& x : m.data) x = uniform_real(rng, -a, a);
  return m;
}

json ParameterStore::to_json() const {
  json out = json::array();
  for (std::size_t i = 0; i < values_.size(); ++i)
    out.push_back({{"name", names_[i]}, {"shape", {values_[i].rows, values_[i].cols}}, {"data", values_[i].data}});
  return out;
}

void ParameterStore::load_json(const json& j) {
  if (j.size() != values_.size()) throw Error("checkpoint has " + std::to_string(j.size()) + " tensors, expected " +
                                              std::to_string(values_.size()));
  for (const auto& t : j) {
    const int i = index(t.at("name").get<std::string>());
    auto& v = values_[static_cast<std::size_t>(i)];
    const auto shape = t.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != v.rows || shape[1] != v.cols)
      throw Error("checkpoint tensor '" + names_[static_cast<std::size_t>(i)] + "' has the wrong shape");
    auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != v.size()) throw Error("checkpoint tensor data length mismatch");
    v.data = std::move(data);
  }
}

Gradients::Gradients(const ParameterStore& s) {
  g.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) g.emplace_back(s.value(static_cast<int>(i)).rows, s.value(static_cast<int>(i)).cols);
}

void Gradients::zero() {
  for (auto& m : g) m.fill(0.0);
}

void Gradients::add(const Gradients& o, double s) {
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t k = 0; k < g[i].size(); ++k) g[i].data[k] += s * o.g[i].data[k];
}

void Gradients::scale(double s) {
  for (auto& m : g)
    for (auto& x : m.data) x *= s;
}

double Gradients::norm() const {
  double s = 0.0;
  for (const auto& m : g)
    for (double x : m.data) s += x * x;
  return std::sqrt(s);
}

// ---- tape -------------------------------------------------------------------

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix m) { return push(std::move(m), {}, nullptr); }

Var Tape::param(int index) {
  if (!store_) throw Error("tape has no parameter store");
  Node n;
  n.value = store_->value(index);
  n.param = index;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::vector<int> inputs, Backward backward) {
  if (check_finite_)
    for (double x : value.data)
      if (!std::isfinite(x)) throw Error("non-finite value produced on tape node " + std::to_string(nodes_.size()));
  Node n;
  n.value = std::move(value);
  for (int i : inputs) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(i)].needs_grad;
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_mut(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size() || n.grad.rows != n.value.rows) n.grad = Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Var loss, Gradients* out) {
  const auto& lv = value(loss.id);
  if (lv.size() != 1) throw ShapeError("backward needs a 1x1 loss");
  for (auto& n : nodes_) n.grad = Matrix();
  grad_mut(loss.id).data[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param >= 0 && out) {
      auto& g = out->g[static_cast<std::size_t>(n.param)];
      for (std::size_t k = 0; k < g.size(); ++k) g.data[k] += n.grad.data[k];
    }
  }
}

// ---- ops --------------------------------------------------------------------

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

template <class F, class DF>
Var unary(Var x, F f, DF df) {
  Tape& t = *x.tape;
  const Matrix& xv = x.value();
  Matrix y(xv.rows, xv.cols);
  for (std::size_t k = 0; k < y.size(); ++k) y.data[k] = f(xv.data[k]);
  const int xi = x.id;
  return t.push(std::move(y), {xi}, [xi, df](Tape& tp, int self) {
    if (!tp.needs_grad(xi)) return;
    const Matrix& gy = tp.grad(self);
    const Matrix& xv2 = tp.value(xi);
    const Matrix& yv = tp.value(self);
    Matrix& gx = tp.grad_mut(xi);
    for (std::size_t k = 0; k < gx.size(); ++k) gx.data[k] += gy.data[k] * df(xv2.data[k], yv.data[k]);
  });
}

}  // namespace

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.cols == B.rows, "matmul: inner dimensions differ");
  Matrix C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double* c = C.row(i);
    const double* ar = A.row(i);
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = B.row(k);
      for (std::size_t j = 0; j < B.cols; ++j) c[j] += aik * br[j];
    }
  }
  const int ai = a.id, bi = b.id;
  return a.tape->push(std::move(C), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A2 = t.value(ai);
    const Matrix& B2 = t.value(bi);
    if (t.needs_grad(ai)) {
      Matrix& GA = t.grad_mut(ai);  // G B^T
      for (std::size_t i = 0; i < A2.rows; ++i)
        for (std::size_t k = 0; k < A2.cols; ++k) {
          double s = 0.0;
          const double* g = G.row(i);
          const double* br = B2.row(k);
          for (std::size_t j = 0; j < B2.cols; ++j) s += g[j] * br[j];
          GA(i, k) += s;
        }
    }
    if (t.needs_grad(bi)) {
      Matrix& GB = t.grad_mut(bi);  // A^T G
      for (std::size_t i = 0; i < A2.rows; ++i) {
        const double* ar = A2.row(i);
        const double* g = G.row(i);
        for (std::size_t k = 0; k < A2.cols; ++k) {
          const double aik = ar[k];
          if (aik == 0.0) continue;
          double* gb = GB.row(k);
          for (std::size_t j = 0; j < B2.cols; ++j) gb[j] += aik * g[j];
        }
      }
    }
  });
}

namespace {

Var binary_same(Var a, Var b, int kind) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.same_shape(B), "elementwise op: shapes differ");
  Matrix C(A.rows, A.cols);
  for (std::size_t k = 0; k < C.size(); ++k)
    C.data[k] = kind == 0 ? A.data[k] + B.data[k] : kind == 1 ? A.data[k] - B.data[k] : A.data[k] * B.data[k];
  const int ai = a.id, bi = b.id;
  return a.tape->push(std::move(C), {ai, bi}, [ai, bi, kind](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.needs_grad(ai)) {
      Matrix& GA = t.grad_mut(ai);
      const Matrix& B2 = t.value(bi);
      for (std::size_t k = 0; k < G.size(); ++k) GA.data[k] += kind == 2 ? G.data[k] * B2.data[k] : G.data[k];
    }
    if (t.needs_grad(bi)) {
      Matrix& GB = t.grad_mut(bi);
      const Matrix& A2 = t.value(ai);
      for (std::size_t k = 0; k < G.size(); ++k)
        GB.data[k] += kind == 0 ? G.data[k] : kind == 1 ? -G.data[k] : G.data[k] * A2.data[k];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary_same(a, b, 0); }
Var sub(Var a, Var b) { return binary_same(a, b, 1); }
Var mul(Var a, Var b) { return binary_same(a, b, 2); }

Var add_row(Var x, Var r) {
  const Matrix& X = x.value();
  const Matrix& R = r.value();
  require(R.rows == 1 && R.cols == X.cols, "add_row: row shape");
  Matrix Y = X;
  for (std::size_t i = 0; i < Y.rows; ++i)
    for (std::size_t j = 0; j < Y.cols; ++j) Y(i, j) += R.data[j];
  const int xi = x.id, ri = r.id;
  return x.tape->push(std::move(Y), {xi, ri}, [xi, ri](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.needs_grad(xi)) {
      Matrix& GX = t.grad_mut(xi);
      for (std::size_t k = 0; k < G.size(); ++k) GX.data[k] += G.data[k];
    }
    if (t.needs_grad(ri)) {
      Matrix& GR = t.grad_mut(ri);
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < G.cols; ++j) GR.data[j] += G(i, j);
    }
  });
}

Var mul_col(Var x, Var c) {
  const Matrix& X = x.value();
  const Matrix& C = c.value();
  require(C.cols == 1 && C.rows == X.rows, "mul_col: column shape");
  Matrix Y = X;
  for (std::size_t i = 0; i < Y.rows; ++i)
    for (std::size_t j = 0; j < Y.cols; ++j) Y(i, j) *= C.data[i];
  const int xi = x.id, ci = c.id;
  return x.tape->push(std::move(Y), {xi, ci}, [xi, ci](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& X2 = t.value(xi);
    const Matrix& C2 = t.value(ci);
    if (t.needs_grad(xi)) {
      Matrix& GX = t.grad_mut(xi);
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < G.cols; ++j) GX(i, j) += G(i, j) * C2.data[i];
    }
    if (t.needs_grad(ci)) {
      Matrix& GC = t.grad_mut(ci);
      for (std::size_t i = 0; i < G.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < G.cols; ++j) s += G(i, j) * X2(i, j);
        GC.data[i] += s;
      }
    }
  });
}

Var scale(Var x, double s) {
  return unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

Var add_scalar(Var x, double s) {
  return unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

Var one_minus(Var x) {
  return unary(x, [](double v) { return 1.0 - v; }, [](double, double) { return -1.0; });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t n = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.rows() == n, "concat_cols: row counts differ");
    total += p.cols();
  }
  Matrix Y(n, total);
  std::vector<int> ids;
  std::vector<std::size_t> offs;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& P = p.value();
    for (std::size_t i = 0; i < n; ++i) std::copy(P.row(i), P.row(i) + P.cols, Y.row(i) + off);
    ids.push_back(p.id);
    offs.push_back(off);
    off += P.cols;
  }
  Tape* tape = parts[0].tape;
  return tape->push(std::move(Y), ids, [ids, offs](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.needs_grad(ids[k])) continue;
      Matrix& GP = t.grad_mut(ids[k]);
      for (std::size_t i = 0; i < GP.rows; ++i)
        for (std::size_t j = 0; j < GP.cols; ++j) GP(i, j) += G(i, offs[k] + j);
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t d = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.cols() == d, "concat_rows: column counts differ");
    total += p.rows();
  }
  Matrix Y(total, d);
  std::vector<int> ids;
  std::vector<std::size_t> offs;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& P = p.value();
    std::copy(P.data.begin(), P.data.end(), Y.data.begin() + static_cast<std::ptrdiff_t>(off * d));
    ids.push_back(p.id);
    offs.push_back(off);
    off += P.rows;
  }
  Tape* tape = parts[0].tape;
  return tape->push(std::move(Y), ids, [ids, offs, d](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.needs_grad(ids[k])) continue;
      Matrix& GP = t.grad_mut(ids[k]);
      const double* src = G.data.data() + offs[k] * d;
      for (std::size_t q = 0; q < GP.size(); ++q) GP.data[q] += src[q];
    }
  });
}

Var slice_cols(Var x, std::size_t start, std::size_t len) {
  const Matrix& X = x.value();
  require(start + len <= X.cols, "slice_cols: out of range");
  Matrix Y(X.rows, len);
  for (std::size_t i = 0; i < X.rows; ++i) std::copy(X.row(i) + start, X.row(i) + start + len, Y.row(i));
  const int xi = x.id;
  return x.tape->push(std::move(Y), {xi}, [xi, start, len](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& GX = t.grad_mut(xi);
    for (std::size_t i = 0; i < G.rows; ++i)
      for (std::size_t j = 0; j < len; ++j) GX(i, start + j) += G(i, j);
  });
}

Var gather_rows(Var x, std::span<const int> index) {
  const Matrix& X = x.value();
  Matrix Y(index.size(), X.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] >= 0 && static_cast<std::size_t>(index[i]) < X.rows, "gather_rows: index out of range");
    std::copy(X.row(static_cast<std::size_t>(index[i])), X.row(static_cast<std::size_t>(index[i])) + X.cols, Y.row(i));
  }
  const int xi = x.id;
  std::vector<int> idx(index.begin(), index.end());
  return x.tape->push(std::move(Y), {xi}, [xi, idx = std::move(idx)](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& GX = t.grad_mut(xi);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* dst = GX.row(static_cast<std::size_t>(idx[i]));
      const double* src = G.row(i);
      for (std::size_t j = 0; j < G.cols; ++j) dst[j] += src[j];
    }
  });
}

Var segment_sum(Var x, std::span<const int> segment, std::size_t n_segments) {
  const Matrix& X = x.value();
  require(segment.size() == X.rows, "segment_sum: segment ids must match rows");
  Matrix Y(n_segments, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    require(segment[i] >= 0 && static_cast<std::size_t>(segment[i]) < n_segments, "segment_sum: bad segment id");
    double* dst = Y.row(static_cast<std::size_t>(segment[i]));
    const double* src = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) dst[j] += src[j];
  }
  const int xi = x.id;
  std::vector<int> seg(segment.begin(), segment.end());
  return x.tape->push(std::move(Y), {xi}, [xi, seg = std::move(seg)](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& GX = t.grad_mut(xi);
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const double* src = G.row(static_cast<std::size_t>(seg[i]));
      double* dst = GX.row(i);
      for (std::size_t j = 0; j < G.cols; ++j) dst[j] += src[j];
    }
  });
}

Var segment_softmax(Var z, std::span<const int> segment, std::size_t n_segments) {
  const Matrix& Z = z.value();
  require(Z.cols == 1 && segment.size() == Z.rows, "segment_softmax: needs a column and matching segments");
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity()), den(n_segments, 0.0);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const auto s = static_cast<std::size_t>(segment[i]);
    require(s < n_segments, "segment_softmax: bad segment id");
    mx[s] = std::max(mx[s], Z.data[i]);
  }
  Matrix Y(Z.rows, 1);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const auto s = static_cast<std::size_t>(segment[i]);
    Y.data[i] = std::exp(Z.data[i] - mx[s]);
    den[s] += Y.data[i];
  }
  for (std::size_t i = 0; i < Z.rows; ++i) Y.data[i] /= den[static_cast<std::size_t>(segment[i])];
  const int zi = z.id;
  std::vector<int> seg(segment.begin(), segment.end());
  return z.tape->push(std::move(Y), {zi}, [zi, seg = std::move(seg), n_segments](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Yv = t.value(self);
    std::vector<double> dot(n_segments, 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) dot[static_cast<std::size_t>(seg[i])] += G.data[i] * Yv.data[i];
    Matrix& GZ = t.grad_mut(zi);
    for (std::size_t i = 0; i < seg.size(); ++i)
      GZ.data[i] += Yv.data[i] * (G.data[i] - dot[static_cast<std::size_t>(seg[i])]);
  });
}

Var segment_softmax(Var z, std::span<const double> prior, std::span<const int> segment, std::size_t n_segments) {
  const Matrix& Z = z.value();
  require(Z.cols == 1 && segment.size() == Z.rows && prior.size() == Z.rows,
          "segment_softmax: needs a column and matching segments/prior");
  std::vector<double> mx(n_segments, -std::numeric_limits<double>::infinity()), den(n_segments, 0.0);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const auto s = static_cast<std::size_t>(segment[i]);
    require(s < n_segments, "segment_softmax: bad segment id");
    require(prior[i] >= 0.0, "segment_softmax: negative prior");
    mx[s] = std::max(mx[s], Z.data[i]);
  }
  Matrix Y(Z.rows, 1);
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const auto s = static_cast<std::size_t>(segment[i]);
    Y.data[i] = prior[i] * std::exp(Z.data[i] - mx[s]);
    den[s] += Y.data[i];
  }
  for (std::size_t i = 0; i < Z.rows; ++i) {
    const double d = den[static_cast<std::size_t>(segment[i])];
    Y.data[i] = d > 0.0 ? Y.data[i] / d : 0.0;
  }
  const int zi = z.id;
  std::vector<int> seg(segment.begin(), segment.end());
  // Same Jacobian as the plain softmax: dy_i/dz_k = y_i (delta_ik - y_k).
  return z.tape->push(std::move(Y), {zi}, [zi, seg = std::move(seg), n_segments](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Yv = t.value(self);
    std::vector<double> dot(n_segments, 0.0);
    for (std::size_t i = 0; i < seg.size(); ++i) dot[static_cast<std::size_t>(seg[i])] += G.data[i] * Yv.data[i];
    Matrix& GZ = t.grad_mut(zi);
    for (std::size_t i = 0; i < seg.size(); ++i)
      GZ.data[i] += Yv.data[i] * (G.data[i] - dot[static_cast<std::size_t>(seg[i])]);
  });
}

Var softmax_rows(Var x) {
  const Matrix& X = x.value();
  Matrix Y(X.rows, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const double m = *std::max_element(X.row(i), X.row(i) + X.cols);
    double s = 0.0;
    for (std::size_t j = 0; j < X.cols; ++j) s += Y(i, j) = std::exp(X(i, j) - m);
    for (std::size_t j = 0; j < X.cols; ++j) Y(i, j) /= s;
  }
  const int xi = x.id;
  return x.tape->push(std::move(Y), {xi}, [xi](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Yv = t.value(self);
    Matrix& GX = t.grad_mut(xi);
    for (std::size_t i = 0; i < G.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < G.cols; ++j) dot += G(i, j) * Yv(i, j);
      for (std::size_t j = 0; j < G.cols; ++j) GX(i, j) += Yv(i, j) * (G(i, j) - dot);
    }
  });
}

Var sum_all(Var x) {
  const Matrix& X = x.value();
  double s = 0.0;
  for (double v : X.data) s += v;
  const int xi = x.id;
  return x.tape->push(Matrix::from(1, 1, {s}), {xi}, [xi](Tape& t, int self) {
    const double g = t.grad(self).data[0];
    Matrix& GX = t.grad_mut(xi);
    for (auto& v : GX.data) v += g;
  });
}

Var mean_all(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum_all(x), n > 0 ? 1.0 / n : 0.0);
}

Var sum_rows(Var x) {
  const Matrix& X = x.value();
  Matrix Y(1, X.cols);
  for (std::size_t i = 0; i < X.rows; ++i)
    for (std::size_t j = 0; j < X.cols; ++j) Y.data[j] += X(i, j);
  const int xi = x.id;
  return x.tape->push(std::move(Y), {xi}, [xi](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& GX = t.grad_mut(xi);
    for (std::size_t i = 0; i < GX.rows; ++i)
      for (std::size_t j = 0; j < GX.cols; ++j) GX(i, j) += G.data[j];
  });
}

Var mean_rows(Var x) {
  const double n = static_cast<double>(x.rows());
  return scale(sum_rows(x), n > 0 ? 1.0 / n : 0.0);
}

Var rowwise_dot(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  require(A.same_shape(B), "rowwise_dot: shapes differ");
  Matrix Y(A.rows, 1);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) s += A(i, j) * B(i, j);
    Y.data[i] = s;
  }
  const int ai = a.id, bi = b.id;
  return a.tape->push(std::move(Y), {ai, bi}, [ai, bi](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A2 = t.value(ai);
    const Matrix& B2 = t.value(bi);
    if (t.needs_grad(ai)) {
      Matrix& GA = t.grad_mut(ai);
      for (std::size_t i = 0; i < A2.rows; ++i)
        for (std::size_t j = 0; j < A2.cols; ++j) GA(i, j) += G.data[i] * B2(i, j);
    }
    if (t.needs_grad(bi)) {
      Matrix& GB = t.grad_mut(bi);
      for (std::size_t i = 0; i < A2.rows; ++i)
        for (std::size_t j = 0; j < A2.cols; ++j) GB(i, j) += G.data[i] * A2(i, j);
    }
  });
}

Var elu(Var x) {
  return unary(
      x, [](double v) { return v > 0 ? v : std::expm1(v); }, [](double v, double y) { return v > 0 ? 1.0 : y + 1.0; });
}

Var relu(Var x) {
  return unary(x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0 ? v : slope * v; }, [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

Var sigmoid(Var x) {
  return unary(x, [](double v) { return sigmoid_value(v); }, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var x) {
  return unary(x, [](double v) { return softplus_value(v); }, [](double v, double) { return sigmoid_value(v); });
}

Var tanh(Var x) {
  return unary(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var log(Var x) {
  return unary(x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var layer_norm(Var x) {
  const Matrix& X = x.value();
  Matrix Y(X.rows, X.cols);
  std::vector<double> inv_sd(X.rows);
  const double d = static_cast<double>(X.cols);
  for (std::size_t i = 0; i < X.rows; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < X.cols; ++j) mu += X(i, j);
    mu /= d;
    double var = 0.0;
    for (std::size_t j = 0; j < X.cols; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
    var /= d;
    inv_sd[i] = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < X.cols; ++j) Y(i, j) = (X(i, j) - mu) * inv_sd[i];
  }
  const int xi = x.id;
  return x.tape->push(std::move(Y), {xi}, [xi, inv_sd = std::move(inv_sd)](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& Yv = t.value(self);
    Matrix& GX = t.grad_mut(xi);
    const double n = static_cast<double>(G.cols);
    for (std::size_t i = 0; i < G.rows; ++i) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t j = 0; j < G.cols; ++j) {
        mg += G(i, j);
        mgy += G(i, j) * Yv(i, j);
      }
      mg /= n;
      mgy /= n;
      for (std::size_t j = 0; j < G.cols; ++j) GX(i, j) += inv_sd[i] * (G(i, j) - mg - Yv(i, j) * mgy);
    }
  });
}

Var bce_with_logits(Var logits, std::span<const double> targets, std::span<const double> weights) {
  const Matrix& Z = logits.value();
  require(Z.cols == 1 && Z.rows == targets.size() && targets.size() == weights.size(), "bce_with_logits: shapes");
  double loss = 0.0;
  for (std::size_t i = 0; i < Z.rows; ++i) loss += weights[i] * (softplus_value(Z.data[i]) - targets[i] * Z.data[i]);
  const int zi = logits.id;
  std::vector<double> y(targets.begin(), targets.end()), w(weights.begin(), weights.end());
  return logits.tape->push(Matrix::from(1, 1, {loss}), {zi}, [zi, y = std::move(y), w = std::move(w)](Tape& t, int self) {
    const double g = t.grad(self).data[0];
    const Matrix& Z2 = t.value(zi);
    Matrix& GZ = t.grad_mut(zi);
    for (std::size_t i = 0; i < y.size(); ++i) GZ.data[i] += g * w[i] * (sigmoid_value(Z2.data[i]) - y[i]);
  });
}

// ---- optimizer --------------------------------------------------------------

AdamState adam_init(const ParameterStore& s) {
  AdamState st;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s.value(static_cast<int>(i));
    st.m.emplace_back(v.rows, v.cols);
    st.v.emplace_back(v.rows, v.cols);
  }
  return st;
}

void adam_step(ParameterStore& s, const Gradients& g, AdamState& st, const AdamConfig& cfg) {
  ++st.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto& p = s.value(static_cast<int>(i)).data;
    const auto& gi = g.g[i].data;
    auto& m = st.m[i].data;
    auto& v = st.v[i].data;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gi[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gi[k] * gi[k];
      p[k] -= cfg.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg.eps);
    }
  }
}

// ---- checkpoints ------------------------------------------------------------

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << json{{"format", "pqr-checkpoint"}, {"version", 1}, {"meta", meta}, {"tensors", tensors}}.dump() << '\n';
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "pqr-checkpoint" || j.value("version", 0) != 1)
    throw Error("'" + path + "' is not a version 1 pqr checkpoint");
  Checkpoint c;
  c.meta = j.at("meta");
  c.tensors = j.at("tensors");
  return c;
}

}  // namespace pqr
