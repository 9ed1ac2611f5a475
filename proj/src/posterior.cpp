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

#include "pqr/posterior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pqr {

std::string to_string(View v) {
  switch (v) {
    case View::P: return "p";
    case View::Q: return "q";
    case View::PQ: return "pq";
    case View::QR: return "qr";
    case View::PQR: return "pqr";
  }
  return "?";
}

View parse_view(const std::string& s) {
  std::string l;
  for (char c : s) l.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (l == "p") return View::P;
  if (l == "q") return View::Q;
  if (l == "pq") return View::PQ;
  if (l == "qr") return View::QR;
  if (l == "pqr") return View::PQR;
  throw Error("unknown view '" + s + "' (expected p, q, pq, qr or pqr)");
}

bool uses_q(View v) { return v != View::P; }
bool uses_r(View v) { return v == View::QR || v == View::PQR; }

std::vector<double> Posterior::probabilities() const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = rows[i].prob;
  return out;
}

std::vector<std::size_t> Posterior::ranking() const {
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rows[a].prob > rows[b].prob; });
  return idx;
}

nlohmann::json Posterior::to_json(std::size_t top) const {
  nlohmann::json j;
  j["view"] = to_string(view);
  j["z2"] = z2;
  j["z3"] = z3;
  auto& out = j["rows"] = nlohmann::json::array();
  const auto order = ranking();
  const std::size_t n = top ? std::min(top, order.size()) : order.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = rows[order[k]];
    out.push_back({{"rank", k + 1}, {"index", r.index}, {"key", r.key}, {"smiles", r.smiles}, {"p", r.p}, {"q", r.q},
                   {"r", r.r}, {"q_hat", r.q_hat}, {"r_hat", r.r_hat}, {"prob", r.prob}});
  }
  return j;
}

Posterior assemble_factors(const Vocabulary& vocab, std::span<const double> q, std::span<const double> r, View view,
                           const ViewFilter& filter) {
  const std::size_t n = vocab.size();
  if (n == 0) throw Error("empty vocabulary");
  if (q.size() != n) throw Error("q column size differs from the vocabulary");
  if (!r.empty() && r.size() != n) throw Error("r column size differs from the vocabulary");
  if (uses_r(view) && r.empty()) throw Error("view " + to_string(view) + " needs the 3D factor");
  Posterior post;
  post.view = view;
  post.rows.resize(n);
  double z2 = 0.0, z3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = post.rows[i];
    row.index = i;
    row.key = vocab.entry(i).key;
    row.smiles = vocab.entry(i).smiles;
    row.p = vocab.p1d(i);
    row.q = q[i];
    row.r = r.empty() ? 1.0 : r[i];
    if (!(row.q > 0.0) || !(row.r > 0.0) || !std::isfinite(row.q) || !std::isfinite(row.r))
      throw Error("likelihood factors must be positive and finite");
    z2 += row.p * row.q;
    z3 += row.p * row.q * row.r;
  }
  post.z2 = z2;
  post.z3 = z3;

  std::vector<char> keep(n, 1);
  if (filter.top_n || filter.min_pq > 0.0) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return post.rows[a].p * post.rows[a].q > post.rows[b].p * post.rows[b].q;
    });
    for (std::size_t k = 0; k < n; ++k) {
      const auto& row = post.rows[idx[k]];
      if ((filter.top_n && k >= filter.top_n) || row.p * row.q < filter.min_pq) keep[idx[k]] = 0;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = post.rows[i];
    row.q_hat = row.q / z2;
    row.r_hat = (z2 / z3) * row.r;
    double w = 1.0;
    if (view != View::QR && view != View::Q) w *= row.p;
    if (uses_q(view)) w *= row.q;
    if (uses_r(view)) w *= row.r;
    row.prob = keep[i] ? w : 0.0;
    total += row.prob;
  }
  if (!(total > 0.0)) throw Error("filter removed every motif");
  for (auto& row : post.rows) row.prob /= total;
  return post;
}

Posterior assemble(const MolGraph& core, int atom, const MolGraph* protein, const Model2D& m2, const Model3D* m3,
                   View view, const ViewFilter& filter) {
  std::vector<double> q, r;
  q = uses_q(view) || filter.top_n || filter.min_pq > 0.0 ? m2.q(core, atom)
                                                          : std::vector<double>(m2.vocabulary().size(), 1.0);
  if (m3) {
    if (m3->vocab_hash() != m2.vocab_hash()) throw FingerprintError("2D and 3D models use different vocabularies");
    if (protein) r = m3->r(*protein, core, atom);
  }
  if (uses_r(view) && (!m3 || !protein)) throw Error("view " + to_string(view) + " needs a 3D model and a protein");
  return assemble_factors(m2.vocabulary(), q, r, view, filter);
}

std::size_t sample(const Posterior& post, Rng& rng) {
  const auto p = post.probabilities();
  return post.rows[sample_index(p, rng)].index;
}

double normalized_entropy(std::span<const double> prob) {
  if (prob.size() < 2) return 0.0;
  double h = 0.0;
  for (double p : prob)
    if (p > 0.0) h -= p * std::log(p);
  return std::clamp(h / std::log(static_cast<double>(prob.size())), 0.0, 1.0);
}

double entropy(const Posterior& post) { return normalized_entropy(post.probabilities()); }

MolGraph TestStep::placed_core() const {
  if (!complex) throw Error("step has no complex");
  return place_core(step, complex->ligand);
}

namespace {

nlohmann::json histogram(const std::vector<double>& v) {
  constexpr int kBins = 20;
  std::vector<std::size_t> counts(kBins, 0);
  for (double x : v) {
    int b = static_cast<int>(std::floor((x + 1.0) / 2.0 * kBins));
    counts[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))]++;
  }
  return {{"lo", -1.0}, {"hi", 1.0}, {"counts", counts}};
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

nlohmann::json EntropyShiftReport::summary() const {
  std::vector<double> hq, hqr, hpqr, dq, dr, dp;
  for (const auto& r : rows) {
    hq.push_back(r.h_q);
    hqr.push_back(r.h_qr);
    hpqr.push_back(r.h_pqr);
    dq.push_back(r.d_q);
    dr.push_back(r.d_r);
    dp.push_back(r.d_p);
  }
  return {{"n_steps", rows.size()},
          {"mean", {{"h_q", mean(hq)}, {"h_qr", mean(hqr)}, {"h_pqr", mean(hpqr)}}},
          {"mean_delta", {{"q", mean(dq)}, {"r", mean(dr)}, {"p", mean(dp)}}},
          {"histogram", {{"q", histogram(dq)}, {"r", histogram(dr)}, {"p", histogram(dp)}}}};
}

std::string EntropyShiftReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "step,h_q,h_qr,h_pqr,d_q,d_r,d_p\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << i << ',' << r.h_q << ',' << r.h_qr << ',' << r.h_pqr << ',' << r.d_q << ',' << r.d_r << ',' << r.d_p
       << '\n';
  }
  return os.str();
}

EntropyShiftReport entropy_shift_report(std::span<const TestStep> steps, const Model2D& m2, const Model3D& m3) {
  if (m3.vocab_hash() != m2.vocab_hash()) throw FingerprintError("2D and 3D models use different vocabularies");
  EntropyShiftReport rep;
  for (const auto& s : steps) {
    const MolGraph core = s.placed_core();
    const int a = s.step.growth_atom;
    const auto q = m2.q(core, a);
    const auto r = m3.r(s.complex->protein, core, a);
    EntropyRow row;
    row.h_q = entropy(assemble_factors(m2.vocabulary(), q, r, View::Q));
    row.h_qr = entropy(assemble_factors(m2.vocabulary(), q, r, View::QR));
    row.h_pqr = entropy(assemble_factors(m2.vocabulary(), q, r, View::PQR));
    row.d_q = row.h_q - 1.0;
    row.d_r = row.h_qr - row.h_q;
    row.d_p = row.h_pqr - row.h_qr;
    rep.rows.push_back(row);
  }
  return rep;
}

std::string KernelMatrix::to_csv(bool distance) const {
  const Matrix& m = distance ? d : k;
  std::ostringstream os;
  os.precision(17);
  os << "key";
  for (const auto& key : keys) os << ',' << key;
  os << '\n';
  for (std::size_t i = 0; i < m.rows; ++i) {
    os << keys[i];
    for (std::size_t j = 0; j < m.cols; ++j) os << ',' << m(i, j);
    os << '\n';
  }
  return os.str();
}

KernelMatrix score_kernel(const Model2D& m2, std::span<const GrowthContext> contexts, double var_floor) {
  const std::size_t n = contexts.size();
  if (n < 2) throw Error("score kernel needs at least two contexts");
  const std::size_t nv = m2.vocabulary().size();
  Matrix a(n, nv);
  for (std::size_t c = 0; c < n; ++c) {
    const auto lg = m2.logits(contexts[c].core, contexts[c].atom);
    for (std::size_t i = 0; i < nv; ++i) a(c, i) = 1.0 / (1.0 + std::exp(-lg[i]));
  }
  KernelMatrix km;
  for (std::size_t i = 0; i < nv; ++i) {
    km.keys.push_back(m2.vocabulary().entry(i).key);
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += a(c, i);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (a(c, i) - mu) * (a(c, i) - mu);
    var /= static_cast<double>(n);
    if (var < var_floor) {
      var = var_floor;
      km.floored.push_back(i);
    }
    const double s = 1.0 / std::sqrt(var);
    for (std::size_t c = 0; c < n; ++c) a(c, i) = (a(c, i) - mu) * s;
  }
  km.k = Matrix(nv, nv);
  km.d = Matrix(nv, nv);
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t j = i; j < nv; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < n; ++c) s += a(c, i) * a(c, j);
      s /= static_cast<double>(n);
      km.k(i, j) = km.k(j, i) = s;
      km.d(i, j) = km.d(j, i) = 1.0 - s;
    }
  return km;
}

}  // namespace pqr
