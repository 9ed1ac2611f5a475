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

#include "pqr/serve.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <thread>

#include <httplib.h>

namespace pqr {

using json = nlohmann::json;

namespace {

constexpr double kBondLength = 1.5;
constexpr int kSphereDirections = 64;
constexpr int kTorsionSteps = 12;

std::vector<Vec3> sphere_directions() {
  // Fibonacci lattice
  std::vector<Vec3> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < kSphereDirections; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / kSphereDirections;
    const double rad = std::sqrt(1.0 - y * y);
    const double th = golden * i;
    out.push_back({std::cos(th) * rad, y, std::sin(th) * rad});
  }
  return out;
}

Vec3 unit(const Vec3& v) {
  const double n = v.norm();
  return n > 1e-9 ? v * (1.0 / n) : Vec3{1, 0, 0};
}

double min_distance(const Vec3& p, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : pts) best = std::min(best, distance(p, q));
  return best;
}

std::vector<Vec3> coords_of(const MolGraph& g) {
  std::vector<Vec3> out;
  for (const auto& a : g.atoms())
    if (a.coords) out.push_back(*a.coords);
  return out;
}

ServiceError bad_request(const std::string& code, const std::string& msg) { return {400, code, msg}; }

}  // namespace

std::vector<GrowthVector> rank_growth_vectors(const MolGraph& core, const MolGraph* protein) {
  std::vector<GrowthVector> out;
  const auto prot = protein ? coords_of(*protein) : std::vector<Vec3>{};
  for (int i = 0; i < static_cast<int>(core.num_atoms()); ++i) {
    if (!has_open_valence(core, i)) continue;
    GrowthVector g;
    g.atom = i;
    g.n_hydrogens = core.atom(i).n_hydrogens;
    if (!prot.empty() && core.atom(i).coords)
      g.clearance = std::round(min_distance(*core.atom(i).coords, prot) * 1000.0) / 1000.0;
    out.push_back(g);
  }
  std::stable_sort(out.begin(), out.end(), [](const GrowthVector& a, const GrowthVector& b) {
    const double ca = a.clearance.value_or(0.0), cb = b.clearance.value_or(0.0);
    if (ca != cb) return ca > cb;
    return a.n_hydrogens > b.n_hydrogens;
  });
  return out;
}

std::vector<Vec3> place_motif(const MolGraph& core, int atom, const Motif& motif, const MolGraph* protein) {
  if (!core.atom(atom).coords) throw Error("placement needs a posed core");
  const Vec3 pa = *core.atom(atom).coords;
  Vec3 mean{};
  int n = 0;
  for (const auto& nb : core.neighbors(atom))
    if (core.atom(nb.atom).coords) {
      mean += *core.atom(nb.atom).coords;
      ++n;
    }
  const Vec3 dir = n ? unit(pa - mean * (1.0 / n)) : Vec3{1, 0, 0};

  const auto& mg = motif.graph;
  const std::size_t m = mg.num_atoms();
  std::vector<Vec3> pos(m);
  std::vector<bool> done(m, false);
  std::vector<int> parent(m, -1);
  const int root = motif.attachment;
  pos[static_cast<std::size_t>(root)] = pa + dir * kBondLength;
  done[static_cast<std::size_t>(root)] = true;

  auto core_pts = coords_of(core);
  std::vector<Vec3> placed{pa, pos[static_cast<std::size_t>(root)]};
  const auto dirs = sphere_directions();
  std::vector<int> queue{root};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int u = queue[qi];
    for (const auto& nb : mg.neighbors(u)) {
      const auto v = static_cast<std::size_t>(nb.atom);
      if (done[v]) continue;
      // direction that keeps the new atom furthest from everything placed
      Vec3 best{};
      double best_d = -1.0;
      for (const auto& d : dirs) {
        const Vec3 c = pos[static_cast<std::size_t>(u)] + d * kBondLength;
        const double dd = std::min(min_distance(c, placed), min_distance(c, core_pts));
        if (dd > best_d + 1e-12) {
          best_d = dd;
          best = c;
        }
      }
      pos[v] = best;
      done[v] = true;
      parent[v] = u;
      placed.push_back(best);
      queue.push_back(nb.atom);
    }
  }

  // torsion scan about the new bond
  std::vector<Vec3> env;
  for (int i = 0; i < static_cast<int>(core.num_atoms()); ++i)
    if (i != atom && core.atom(i).coords) env.push_back(*core.atom(i).coords);
  if (protein)
    for (const auto& p : coords_of(*protein)) env.push_back(p);
  std::vector<Vec3> best = pos;
  double best_clear = -1.0;
  for (int k = 0; k < kTorsionSteps; ++k) {
    const double ang = 2.0 * std::numbers::pi * k / kTorsionSteps;
    std::vector<Vec3> cand(m);
    double clear = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      cand[i] = rotate_about_axis(pos[i], pa, dir, ang);
      if (!env.empty()) clear = std::min(clear, min_distance(cand[i], env));
    }
    if (clear > best_clear + 1e-12) {
      best_clear = clear;
      best = cand;
    }
  }
  return best;
}

// ---- service -----------------------------------------------------------------

Service::Service(ServiceModels models, std::string event_log) : models_(std::move(models)), log_path_(std::move(event_log)) {
  if (!models_.m2) throw Error("serve: a 2D model is required");
  if (models_.m3 && models_.m3->vocab_hash() != models_.m2->vocab_hash())
    throw FingerprintError("serve: 2D and 3D models use different vocabularies");
  if (!log_path_.empty() && std::filesystem::exists(log_path_)) replay();
}

void Service::replay() {
  std::ifstream in(log_path_);
  std::string line;
  std::size_t n = 0;
  replaying_ = true;
  try {
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const json ev = json::parse(line);
      const std::string type = ev.at("event");
      if (type == "create") {
        const json out = create_session(ev.at("request"));
        if (out.at("id") != ev.at("id")) throw Error("session id mismatch");
      } else if (type == "apply") {
        apply(ev.at("id"), ev.at("request"));
      } else if (type == "undo") {
        undo(ev.at("id"));
      } else {
        throw Error("unknown event '" + type + "'");
      }
    }
  } catch (const std::exception& e) {
    replaying_ = false;
    throw Error("session log " + log_path_ + " line " + std::to_string(n) + ": " + e.what());
  }
  replaying_ = false;
}

void Service::append_event(const json& ev) {
  if (log_path_.empty() || replaying_) return;
  std::lock_guard lk(log_mu_);
  std::ofstream out(log_path_, std::ios::app);
  if (!out) throw Error("cannot append to " + log_path_);
  out << ev.dump() << '\n';
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::shared_lock lk(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
  return it->second;
}

json Service::create_session(const json& req) {
  auto s = std::make_shared<Session>();
  if (!req.is_object()) throw bad_request("bad_request", "expected a JSON object");
  if (req.contains("complex")) {
    if (!req["complex"].is_string()) throw bad_request("bad_request", "complex must be a string id");
    const std::string cid = req["complex"];
    const auto it = models_.complexes.find(cid);
    if (it == models_.complexes.end()) throw ServiceError(404, "unknown_complex", "no complex '" + cid + "'");
    s->complex = std::make_shared<const Complex>(it->second);
    s->core = s->complex->ligand;
  } else if (req.contains("smiles")) {
    if (!req["smiles"].is_string()) throw bad_request("bad_request", "smiles must be a string");
    try {
      s->core = parse_smiles(req["smiles"].get<std::string>());
    } catch (const Error& e) {
      throw bad_request("parse_error", e.what());
    }
  } else {
    throw bad_request("bad_request", "give 'smiles' or 'complex'");
  }
  {
    std::unique_lock lk(sessions_mu_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_[s->id] = s;
  }
  append_event({{"event", "create"}, {"id", s->id}, {"request", req}});
  json out = molecule(s->id);
  out["id"] = s->id;
  return out;
}

json Service::growth_vectors(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lk(s->mu);
  json arr = json::array();
  int rank = 1;
  for (const auto& g : rank_growth_vectors(s->core, s->complex ? &s->complex->protein : nullptr)) {
    json j{{"atom", g.atom},
           {"rank", rank++},
           {"element", std::string(element_symbol(s->core.atom(g.atom).atomic_number))},
           {"n_hydrogens", g.n_hydrogens}};
    j["clearance"] = g.clearance ? json(*g.clearance) : json(nullptr);
    arr.push_back(j);
  }
  return {{"id", id}, {"growth_vectors", arr}};
}

json Service::posterior(const std::string& id, int atom, const std::string& view_name, std::size_t top) const {
  const auto s = find(id);
  View view;
  try {
    view = parse_view(view_name);
  } catch (const Error& e) {
    throw bad_request("bad_view", e.what());
  }
  if (view == View::Q) throw bad_request("bad_view", "view must be one of p, pq, qr, pqr");
  std::lock_guard lk(s->mu);
  if (atom < 0 || atom >= static_cast<int>(s->core.num_atoms()) || !has_open_valence(s->core, atom))
    throw bad_request("invalid_atom", "atom " + std::to_string(atom) + " is not a growth vector");
  const bool has3d = s->complex && models_.m3;
  if (uses_r(view) && !has3d)
    throw bad_request("missing_3d_context", "view " + to_string(view) + " needs a complex-backed session and a 3D model");

  std::vector<View> views{View::P, View::PQ};
  if (has3d) views.insert(views.end(), {View::QR, View::PQR});
  std::map<View, Posterior> post;
  std::map<View, std::vector<std::size_t>> rank;  // vocabulary index -> 1-based rank
  for (View v : views) {
    post.emplace(v, assemble(s->core, atom, has3d ? &s->complex->protein : nullptr, *models_.m2, models_.m3.get(), v));
    const auto order = post.at(v).ranking();
    auto& r = rank[v];
    r.assign(order.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) r[post.at(v).rows[order[i]].index] = i + 1;
  }
  const View ref = view == View::P ? View::P : view == View::PQ ? View::P : View::PQ;
  const Posterior& p = post.at(view);
  const auto order = p.ranking();
  const std::size_t n = top == 0 ? order.size() : std::min(top, order.size());
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = p.rows[order[i]];
    json ranks = json::object();
    for (View v : views) ranks[to_string(v)] = rank.at(v)[row.index];
    json j{{"rank", i + 1},
           {"key", row.key},
           {"smiles", row.smiles},
           {"p", row.p},
           {"q_hat", row.q_hat},
           {"prob", row.prob},
           {"ranks", ranks},
           {"rank_delta", static_cast<long>(rank.at(ref)[row.index]) - static_cast<long>(i + 1)}};
    j["r_hat"] = has3d && uses_r(view) ? json(row.r_hat) : json(nullptr);
    rows.push_back(j);
  }
  json entropy = json::object();
  for (View v : views) entropy[to_string(v)] = normalized_entropy(post.at(v).probabilities());
  return {{"id", id},       {"atom", atom},         {"view", to_string(view)}, {"reference_view", to_string(ref)},
          {"z2", p.z2},     {"z3", p.z3},           {"entropy", entropy},      {"rows", rows},
          {"n_motifs", p.rows.size()}};
}

json Service::apply(const std::string& id, const json& req) {
  const auto s = find(id);
  if (!req.is_object() || !req.contains("atom") || !req.contains("motif") || !req["atom"].is_number_integer() ||
      !req["motif"].is_string())
    throw bad_request("bad_request", "expected {\"atom\": int, \"motif\": key}");
  const int atom = req["atom"];
  const std::string key = req["motif"];
  const auto& vocab = models_.m2->vocabulary();
  const auto idx = vocab.find(key);
  if (!idx) throw ServiceError(404, "unknown_motif", "motif '" + key + "' is not in the vocabulary");
  const Motif& motif = vocab.entry(*idx).motif;
  {
    std::lock_guard lk(s->mu);
    if (atom < 0 || atom >= static_cast<int>(s->core.num_atoms()))
      throw bad_request("invalid_atom", "atom " + std::to_string(atom) + " is out of range");
    MolGraph next;
    try {
      if (s->complex) {
        const auto xyz = place_motif(s->core, atom, motif, &s->complex->protein);
        next = attach_motif(s->core, atom, motif, BondOrder::Single, &xyz);
      } else {
        next = attach_motif(s->core, atom, motif, BondOrder::Single);
      }
    } catch (const ValenceError& e) {
      throw ServiceError(422, "valence_error", e.what());
    }
    s->history.push_back(std::move(s->core));
    s->core = std::move(next);
    s->applied.emplace_back(atom, key);
    append_event({{"event", "apply"}, {"id", id}, {"request", req}});
  }
  return molecule(id);
}

json Service::undo(const std::string& id) {
  const auto s = find(id);
  {
    std::lock_guard lk(s->mu);
    if (s->history.empty()) throw ServiceError(409, "empty_history", "nothing to undo");
    s->core = std::move(s->history.back());
    s->history.pop_back();
    s->applied.pop_back();
    append_event({{"event", "undo"}, {"id", id}});
  }
  return molecule(id);
}

json Service::molecule(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lk(s->mu);
  json hist = json::array();
  for (const auto& [a, k] : s->applied) hist.push_back({{"atom", a}, {"motif", k}});
  json out{{"id", id},
           {"smiles", write_smiles(s->core)},
           {"num_atoms", s->core.num_atoms()},
           {"history", hist},
           {"complex", s->complex ? json(s->complex->id) : json(nullptr)}};
  if (s->core.has_coords()) {
    json xyz = json::array();
    for (const auto& a : s->core.atoms()) xyz.push_back({a.coords->x, a.coords->y, a.coords->z});
    out["coords"] = xyz;
  } else {
    out["coords"] = nullptr;
  }
  return out;
}

std::vector<std::string> Service::session_ids() const {
  std::shared_lock lk(sessions_mu_);
  std::vector<std::string> out;
  for (const auto& [k, v] : sessions_) out.push_back(k);
  return out;
}

std::size_t Service::history_size(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lk(s->mu);
  return s->history.size();
}

MolGraph Service::core(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lk(s->mu);
  return s->core;
}

// ---- http ----------------------------------------------------------------------

struct HttpServer::Impl {
  Service& service;
  std::string origin;
  httplib::Server server;
  std::thread thread;

  Impl(Service& s, std::string o) : service(s), origin(std::move(o)) {}
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    send_json(res, 200, f());
  } catch (const ServiceError& e) {
    send_json(res, e.status(), {{"code", e.code()}, {"message", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"code", "bad_request"}, {"message", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"code", "internal"}, {"message", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(400, "bad_json", e.what());
  }
}

}  // namespace

HttpServer::HttpServer(Service& service, std::string cors_origin)
    : impl_(std::make_unique<Impl>(service, std::move(cors_origin))) {
  auto& srv = impl_->server;
  Service& svc = impl_->service;
  const std::string origin = impl_->origin;
  srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  srv.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.create_session(parse_body(req)); });
  });
  srv.Get(R"(/sessions/([^/]+)/growth-vectors)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.growth_vectors(req.matches[1]); });
  });
  srv.Get(R"(/sessions/([^/]+)/posterior)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("atom")) throw ServiceError(400, "bad_request", "atom is required");
      int atom = 0;
      std::size_t top = 0;
      try {
        atom = std::stoi(req.get_param_value("atom"));
        if (req.has_param("top")) top = static_cast<std::size_t>(std::stoul(req.get_param_value("top")));
      } catch (const std::exception&) {
        throw ServiceError(400, "bad_request", "atom and top must be integers");
      }
      const std::string view = req.has_param("view") ? req.get_param_value("view") : "pq";
      return svc.posterior(req.matches[1], atom, view, top);
    });
  });
  srv.Post(R"(/sessions/([^/]+)/apply)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.apply(req.matches[1], parse_body(req)); });
  });
  srv.Post(R"(/sessions/([^/]+)/undo)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.undo(req.matches[1]); });
  });
  srv.Get(R"(/sessions/([^/]+)/molecule)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.molecule(req.matches[1]); });
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_json(res, res.status, {{"code", "not_found"}, {"message", "no such route"}});
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  int bound = port;
  if (port == 0) bound = srv.bind_to_any_port(host);
  else if (!srv.bind_to_port(host, port)) bound = -1;
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pqr
