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

// Interactive elaboration sessions and their HTTP front end.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "pqr/posterior.hpp"

namespace pqr {

/// Request-level failure carrying an HTTP status and a short machine code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& msg)
      : Error(msg), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

struct ServiceModels {
  std::shared_ptr<const Model2D> m2;
  std::shared_ptr<const Model3D> m3;  // optional; enables the r views
  std::map<std::string, Complex> complexes;
};

struct GrowthVector {
  int atom = 0;
  int n_hydrogens = 0;
  std::optional<double> clearance;  // nearest protein atom, complex sessions only
};

/// Atoms that can take one more single bond, most open first.
std::vector<GrowthVector> rank_growth_vectors(const MolGraph& core, const MolGraph* protein);

/// Provisional coordinates for `motif` attached at `atom` of a posed core:
/// bond along the outward direction, greedy layout of the motif atoms, then
/// the torsion about the new bond that keeps furthest from core and protein.
std::vector<Vec3> place_motif(const MolGraph& core, int atom, const Motif& motif, const MolGraph* protein);

class Service {
 public:
  /// Replays `event_log` if it exists; later events are appended to it.
  explicit Service(ServiceModels models, std::string event_log = "");

  nlohmann::json create_session(const nlohmann::json& req);  // {"smiles"} or {"complex"}
  nlohmann::json growth_vectors(const std::string& id) const;
  nlohmann::json posterior(const std::string& id, int atom, const std::string& view, std::size_t top) const;
  nlohmann::json apply(const std::string& id, const nlohmann::json& req);  // {"atom", "motif"}
  nlohmann::json undo(const std::string& id);
  nlohmann::json molecule(const std::string& id) const;

  std::vector<std::string> session_ids() const;
  std::size_t history_size(const std::string& id) const;
  MolGraph core(const std::string& id) const;

 private:
  struct Session {
    std::string id;
    std::shared_ptr<const Complex> complex;
    MolGraph core;
    std::vector<MolGraph> history;
    std::vector<std::pair<int, std::string>> applied;
    mutable std::mutex mu;
  };

  ServiceModels models_;
  std::string log_path_;
  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;
  std::mutex log_mu_;
  bool replaying_ = false;

  std::shared_ptr<Session> find(const std::string& id) const;
  void append_event(const nlohmann::json& ev);
  void replay();
};

/// Runs the HTTP API on a background thread.
class HttpServer {
 public:
  HttpServer(Service& service, std::string cors_origin = "*");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and starts serving; returns the port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pqr
