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

// Python bindings: SMILES helpers, shredding, AUC, the pipeline and sessions.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pqr/pipeline.hpp"
#include "pqr/serve.hpp"

namespace py = pybind11;
using json = nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::object& o) { return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>()); }

// Pipeline plus the models a session service needs; one per loaded run.
class PyService {
 public:
  PyService(pqr::Pipeline& p, const std::string& event_log) {
    pqr::ServiceModels m;
    m.m2 = std::make_shared<const pqr::Model2D>(p.load_model2d(true));
    m.m3 = std::make_shared<const pqr::Model3D>(p.load_model3d());
    for (auto& c : pqr::load_complexes(p.config().complexes)) m.complexes.emplace(c.id, std::move(c));
    svc_ = std::make_unique<pqr::Service>(std::move(m), event_log);
  }
  pqr::Service& operator*() { return *svc_; }

 private:
  std::unique_ptr<pqr::Service> svc_;
};

pqr::PipelineConfig load_config(const std::string& path, std::optional<std::string> out, std::optional<std::uint64_t> seed,
                                std::optional<int> workers) {
  auto cfg = pqr::PipelineConfig::load(path);
  cfg.apply_overrides(seed, workers);
  if (out) cfg.out = *out;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_pqr, m) {
  m.doc() = "motif-level molecule elaboration models";

  static py::exception<pqr::Error> error(m, "Error");
  static py::exception<pqr::FingerprintError> fp_error(m, "FingerprintError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pqr::ServiceError& e) {
      py::set_error(error, (e.code() + ": " + e.what()).c_str());
    } catch (const pqr::FingerprintError& e) {
      py::set_error(fp_error, e.what());
    } catch (const pqr::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("canonical_smiles", [](const std::string& s) { return pqr::write_smiles(pqr::parse_smiles(s)); },
        py::arg("smiles"));
  m.def("num_atoms", [](const std::string& s) { return pqr::parse_smiles(s).num_atoms(); }, py::arg("smiles"));
  m.def(
      "shred",
      [](const std::string& s, std::uint64_t seed) {
        const auto g = pqr::parse_smiles(s);
        pqr::ShredPolicy pol;
        pol.rng_seed = seed;
        const auto r = pqr::shred(g, pol);
        std::vector<std::vector<int>> out;
        for (const auto& mo : r.motifs) out.emplace_back(mo.begin(), mo.end());
        return out;
      },
      py::arg("smiles"), py::arg("seed") = 0, "atom groups of one stochastic shredding");
  m.def(
      "vocabulary",
      [](const std::vector<std::string>& smiles, int shreds) {
        std::vector<pqr::MolGraph> mols;
        for (const auto& s : smiles) mols.push_back(pqr::parse_smiles(s));
        return to_py(pqr::build_vocabulary(mols, pqr::ShredPolicy{}, shreds).to_json());
      },
      py::arg("smiles"), py::arg("shreds_per_molecule") = 4);
  m.def("mann_whitney_auc", [](const std::vector<double>& pos, const std::vector<double>& neg) {
    return pqr::mann_whitney_auc(pos, neg);
  });
  m.def("normalized_entropy", [](const std::vector<double>& p) { return pqr::normalized_entropy(p); });
  m.def(
      "write_fixtures",
      [](const std::string& dir, std::size_t molecules, std::size_t complexes, std::uint64_t seed) {
        pqr::FixtureSpec fx;
        fx.n_molecules = molecules;
        fx.n_complexes = complexes;
        fx.seed = seed;
        return pqr::write_fixtures(dir, fx);
      },
      py::arg("dir"), py::arg("molecules") = 500, py::arg("complexes") = 50, py::arg("seed") = 7);

  py::class_<pqr::Pipeline>(m, "Pipeline")
      .def(py::init([](const std::string& config, std::optional<std::string> out, std::optional<std::uint64_t> seed,
                       std::optional<int> workers) { return pqr::Pipeline(load_config(config, out, seed, workers)); }),
           py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(), py::arg("workers") = py::none())
      .def_property_readonly("config", [](const pqr::Pipeline& p) { return to_py(p.config().to_json()); })
      .def_property_readonly("out", [](const pqr::Pipeline& p) { return p.config().out; })
      .def("path", &pqr::Pipeline::path)
      .def("build_vocab", &pqr::Pipeline::build_vocab, py::call_guard<py::gil_scoped_release>())
      .def("train_2d", &pqr::Pipeline::train_2d, py::call_guard<py::gil_scoped_release>())
      .def("recalibrate", &pqr::Pipeline::recalibrate, py::call_guard<py::gil_scoped_release>())
      .def("train_3d", &pqr::Pipeline::train_3d, py::arg("baseline") = "", py::call_guard<py::gil_scoped_release>())
      .def("evaluate", [](pqr::Pipeline& p) { return to_py(p.evaluate()); })
      .def("report", [](pqr::Pipeline& p) { return to_py(p.report()); })
      .def("kernel", &pqr::Pipeline::kernel, py::call_guard<py::gil_scoped_release>())
      .def("run_all", [](pqr::Pipeline& p) { return to_py(p.run_all()); });

  py::class_<PyService>(m, "Service")
      .def(py::init<pqr::Pipeline&, const std::string&>(), py::arg("pipeline"), py::arg("event_log") = "")
      .def("create_session", [](PyService& s, const py::dict& req) { return to_py((*s).create_session(from_py(req))); })
      .def("growth_vectors", [](PyService& s, const std::string& id) { return to_py((*s).growth_vectors(id)); })
      .def(
          "posterior",
          [](PyService& s, const std::string& id, int atom, const std::string& view, std::size_t top) {
            return to_py((*s).posterior(id, atom, view, top));
          },
          py::arg("id"), py::arg("atom"), py::arg("view") = "pq", py::arg("top") = 0)
      .def("apply", [](PyService& s, const std::string& id, const py::dict& req) { return to_py((*s).apply(id, from_py(req))); })
      .def("undo", [](PyService& s, const std::string& id) { return to_py((*s).undo(id)); })
      .def("molecule", [](PyService& s, const std::string& id) { return to_py((*s).molecule(id)); });
}
