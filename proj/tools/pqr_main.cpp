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

// pqr: command-line driver for the training pipeline, sampling and the session service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iomanip>
#include <iostream>

#include "pqr/pipeline.hpp"
#include "pqr/serve.hpp"

using namespace pqr;
using json = nlohmann::json;

namespace {

constexpr int kExitError = 2;
constexpr int kExitFingerprint = 3;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "master seed (overrides the config)");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "artifact directory (overrides the config)");
}

Pipeline make_pipeline(const Common& c) {
  auto cfg = PipelineConfig::load(c.config);
  cfg.apply_overrides(c.seed, c.workers);
  if (!c.out.empty()) cfg.out = c.out;
  return Pipeline(cfg, [](const std::string& m) { std::cerr << m << '\n'; });
}

HttpServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pqr: motif-level molecule elaboration models"};
  app.require_subcommand(1);
  Common common;

  // synth
  auto* synth = app.add_subcommand("synth", "write the bundled fixtures");
  std::string synth_dir = "data";
  FixtureSpec fx;
  synth->add_option("--out", synth_dir, "output directory");
  synth->add_option("--seed", fx.seed, "fixture seed");
  synth->add_option("--molecules", fx.n_molecules, "corpus size");
  synth->add_option("--complexes", fx.n_complexes, "number of synthetic complexes");

  // stages
  std::map<std::string, CLI::App*> stages;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"build-vocab", "motif vocabularies and the complex split"},
           {"train-2d", "contrastive 2D training over the 1D baseline"},
           {"recalibrate", "transfer the 2D model to the complex vocabulary"},
           {"train-3d", "3D training over the recalibrated 2D baseline"},
           {"evaluate", "ROC matrix, close/far splits and null metrics"},
           {"report", "entropy-shift report"},
           {"kernel", "score kernel and distance matrix"},
           {"pipeline", "all stages in order"}}) {
    stages[name] = app.add_subcommand(name, help);
    add_common(stages[name], common);
  }
  std::string baseline;
  stages["train-3d"]->add_option("--baseline", baseline, "recalibrated 2D checkpoint (default: from --out)");

  // sample
  auto* sample = app.add_subcommand("sample", "posterior table and draws at one growth vector");
  add_common(sample, common);
  std::string view_name = "pq", smiles, complex_id;
  int atom = -1, top = 10, draws = 0;
  sample->add_option("--view", view_name, "p, pq, qr or pqr");
  auto* o_smi = sample->add_option("--smiles", smiles, "ligand-only query");
  auto* o_cx = sample->add_option("--complex", complex_id, "complex id from the configured complexes");
  o_smi->excludes(o_cx);
  sample->add_option("--atom", atom, "growth atom (default: best ranked)");
  sample->add_option("--top", top, "rows to print (0 = all)");
  sample->add_option("--draws", draws, "motifs to sample from the posterior");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP session service");
  add_common(serve, common);
  std::string host = "127.0.0.1", sessions_log, origin = "*";
  int port = 8080;
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--sessions", sessions_log, "JSON-lines session log (replayed at start)");
  serve->add_option("--origin", origin, "allowed CORS origin");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      for (const auto& f : write_fixtures(synth_dir, fx)) std::cout << f << '\n';
      return 0;
    }
    for (const auto& [name, sub] : stages) {
      if (!sub->parsed()) continue;
      auto p = make_pipeline(common);
      if (name == "build-vocab") p.build_vocab();
      else if (name == "train-2d") p.train_2d();
      else if (name == "recalibrate") p.recalibrate();
      else if (name == "train-3d") p.train_3d(baseline);
      else if (name == "evaluate") std::cout << auc_table(p.evaluate());
      else if (name == "report") std::cout << p.report().dump(2) << '\n';
      else if (name == "kernel") p.kernel();
      else if (name == "pipeline") std::cout << auc_table(p.run_all());
      return 0;
    }
    if (sample->parsed()) {
      auto p = make_pipeline(common);
      const View view = parse_view(view_name);
      if (view == View::Q) throw Error("--view must be one of p, pq, qr, pqr");
      const Model2D m2 = p.load_model2d(true);
      std::optional<Model3D> m3;
      MolGraph core;
      std::optional<Complex> cx;
      if (!complex_id.empty()) {
        for (auto& c : load_complexes(p.config().complexes))
          if (c.id == complex_id) cx = std::move(c);
        if (!cx) throw Error("no complex '" + complex_id + "'");
        core = cx->ligand;
        m3 = p.load_model3d();
      } else if (!smiles.empty()) {
        core = parse_smiles(smiles);
      } else {
        throw Error("give --smiles or --complex");
      }
      if (uses_r(view) && !cx) throw Error("views with r need --complex");
      if (atom < 0) {
        const auto gv = rank_growth_vectors(core, cx ? &cx->protein : nullptr);
        if (gv.empty()) throw Error("the query has no open growth vector");
        atom = gv.front().atom;
      }
      const auto post = assemble(core, atom, cx ? &cx->protein : nullptr, m2, m3 ? &*m3 : nullptr, view);
      const auto order = post.ranking();
      const std::size_t n = top <= 0 ? order.size() : std::min<std::size_t>(static_cast<std::size_t>(top), order.size());
      std::cout << "view " << to_string(view) << "  atom " << atom << "  entropy " << std::fixed << std::setprecision(4)
                << normalized_entropy(post.probabilities()) << '\n';
      std::cout << "rank  prob      p         q_hat     r_hat     motif\n";
      for (std::size_t i = 0; i < n; ++i) {
        const auto& r = post.rows[order[i]];
        std::cout << std::setw(4) << i + 1 << "  " << std::setprecision(6) << r.prob << "  " << r.p << "  " << r.q_hat
                  << "  " << r.r_hat << "  " << r.smiles << '\n';
      }
      if (draws > 0) {
        Rng rng(derive_seed(p.config().seed, 8));
        std::map<std::size_t, int> counts;
        for (int i = 0; i < draws; ++i) ++counts[pqr::sample(post, rng)];
        std::cout << "draws\n";
        for (const auto& [i, c] : counts) std::cout << std::setw(6) << c << "  " << post.rows[i].smiles << '\n';
      }
      return 0;
    }
    if (serve->parsed()) {
      auto p = make_pipeline(common);
      ServiceModels models;
      models.m2 = std::make_shared<const Model2D>(p.load_model2d(true));
      models.m3 = std::make_shared<const Model3D>(p.load_model3d());
      for (auto& c : load_complexes(p.config().complexes)) models.complexes.emplace(c.id, std::move(c));
      Service service(std::move(models), sessions_log);
      HttpServer server(service, origin);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on http://" << host << ':' << port << '\n';
      server.run(host, port);
      g_server = nullptr;
      return 0;
    }
  } catch (const FingerprintError& e) {
    std::cerr << "fingerprint error: " << e.what() << '\n';
    return kExitFingerprint;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
