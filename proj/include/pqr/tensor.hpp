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

// Dense row-major matrices with tape-based reverse-mode differentiation,
// a named parameter store, Adam, and a JSON checkpoint container.

#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqr/common.hpp"

namespace pqr {

class ShapeError : public Error {
 public:
  using Error::Error;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool operator==(const Matrix&) const = default;
};

/// Lazily computed matrix shared by concurrent readers. Copies start empty.
class LazyMatrix {
 public:
  LazyMatrix() = default;
  LazyMatrix(const LazyMatrix&) {}
  LazyMatrix& operator=(const LazyMatrix&) {
    reset();
    return *this;
  }
  template <class F>
  const Matrix& get(F&& compute) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!value_) value_ = compute();
    return *value_;
  }
  void reset() {
    std::lock_guard<std::mutex> lock(mu_);
    value_.reset();
  }

 private:
  mutable std::mutex mu_;
  mutable std::optional<Matrix> value_;
};

/// Named trainable tensors. Index order is registration order.
class ParameterStore {
 public:
  int add(const std::string& name, Matrix value);
  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }
  Matrix& value(int i) { return values_[static_cast<std::size_t>(i)]; }
  const Matrix& value(int i) const { return values_[static_cast<std::size_t>(i)]; }
  const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return values_.size(); }
  std::size_t num_scalars() const;

  /// Glorot-uniform fill for a (fan_in x fan_out) weight.
  static Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);

  nlohmann::json to_json() const;
  /// Replaces values of existing parameters; names and shapes must match.
  void load_json(const nlohmann::json& j);

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::map<std::string, int> by_name_;
};

/// Gradient buffers shaped like a store.
struct Gradients {
  std::vector<Matrix> g;

  explicit Gradients(const ParameterStore& s);
  Gradients() = default;
  void zero();
  void add(const Gradients& o, double scale = 1.0);
  void scale(double s);
  double norm() const;
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double scalar() const { return value().data.at(0); }
};

class Tape {
 public:
  explicit Tape(const ParameterStore* store = nullptr) : store_(store) {}

  Var constant(Matrix m);
  Var param(int index);
  Var param(const std::string& name) { return param(store_->index(name)); }

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and accumulates parameter
  /// gradients into `out` (if given). Each node's backward runs once, in
  /// reverse creation order.
  void backward(Var loss, Gradients* out = nullptr);

  /// When set, every op checks its output for NaN/Inf and throws.
  void set_check_finite(bool on) { check_finite_ = on; }

  // Internal: used by ops.
  using Backward = std::function<void(Tape&, int self)>;
  Var push(Matrix value, std::vector<int> inputs, Backward backward);
  Matrix& grad_mut(int id);
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  const ParameterStore* store() const { return store_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    int param = -1;
    bool needs_grad = false;
  };
  const ParameterStore* store_;
  std::vector<Node> nodes_;
  bool check_finite_ = false;
};

// ---- ops ------------------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);              // pointwise
Var add_row(Var x, Var row);        // x (n x d) + row (1 x d) broadcast
Var mul_col(Var x, Var col);        // x (n x d) * col (n x 1) broadcast
Var scale(Var x, double s);
Var add_scalar(Var x, double s);
Var one_minus(Var x);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t start, std::size_t len);
Var gather_rows(Var x, std::span<const int> index);
/// out[seg[i]] += x[i]; rows of empty segments are zero.
Var segment_sum(Var x, std::span<const int> segment, std::size_t n_segments);
/// Softmax of a column vector within each segment.
Var segment_softmax(Var z, std::span<const int> segment, std::size_t n_segments);
/// Prior-reweighted segment softmax: w_i exp(z_i) / sum_j w_j exp(z_j). A
/// segment whose weights are all zero yields zeros.
Var segment_softmax(Var z, std::span<const double> prior, std::span<const int> segment, std::size_t n_segments);
Var softmax_rows(Var x);
Var sum_all(Var x);
Var mean_all(Var x);
Var sum_rows(Var x);   // (n x d) -> (1 x d)
Var mean_rows(Var x);  // (n x d) -> (1 x d)
Var rowwise_dot(Var a, Var b);  // (n x d), (n x d) -> (n x 1)
Var elu(Var x);
Var relu(Var x);
Var leaky_relu(Var x, double slope = 0.01);
Var sigmoid(Var x);
Var softplus(Var x);
Var tanh(Var x);
Var log(Var x);
constexpr double kLayerNormEps = 1e-6;
Var layer_norm(Var x);  // per row, no affine
/// sum_i w_i * (softplus(z_i) - y_i z_i) for a column of logits.
Var bce_with_logits(Var logits, std::span<const double> targets, std::span<const double> weights);

// scalar helpers
double sigmoid_value(double x);
double softplus_value(double x);

// ---- optimizer --------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long t = 0;
};

AdamState adam_init(const ParameterStore& s);
void adam_step(ParameterStore& s, const Gradients& g, AdamState& state, const AdamConfig& cfg);

// ---- checkpoints ------------------------------------------------------------

/// Tensor container with free-form metadata.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  nlohmann::json tensors = nlohmann::json::object();  // section name -> ParameterStore json

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace pqr
