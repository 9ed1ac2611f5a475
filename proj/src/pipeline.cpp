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

#include "pqr/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "pqr/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace pqr {

namespace {

TrainConfig stage_defaults(int epochs, int batch, double lr, int k_neg) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.batch_size = batch;
  t.lr = lr;
  t.k_neg = k_neg;
  return t;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

TrainConfig stage_from_json(const json& j, const TrainConfig& defaults, const std::string& name) {
  if (j.contains("seed") || j.contains("workers"))
    throw Error(name + ": seed and workers are set at the top level of the config");
  return TrainConfig::from_json(j, defaults);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

}  // namespace

PipelineConfig::PipelineConfig()
    : train_2d(stage_defaults(20, 32, 1e-3, 16)),
      recalibrate(stage_defaults(10, 32, 1e-3, 16)),
      train_3d(stage_defaults(15, 8, 1e-3, 8)) {}

void PipelineConfig::validate() const {
  if (corpus.empty()) throw Error("config: corpus path is required");
  if (complexes.empty()) throw Error("config: complexes path is required");
  for (const auto* p : {&corpus, &complexes})
    if (!fs::exists(*p)) throw Error("config: input file " + *p + " does not exist");
  if (workers < 1) throw Error("config: workers must be >= 1");
  if (vocab_shreds < 1) throw Error("config: vocab_shreds must be >= 1");
  if (d < 2) throw Error("config: d must be >= 2");
  if (eval.k_neg < 1) throw Error("config: eval.k_neg must be >= 1");
  if (!(eval.test_fraction > 0.0 && eval.test_fraction < 1.0))
    throw Error("config: eval.test_fraction must lie in (0, 1)");
  if (eval.kernel_contexts < 2) throw Error("config: eval.kernel_contexts must be >= 2");
  shred.validate();
  train_2d.validate();
  recalibrate.validate();
  train_3d.validate();
  noise.validate();
  prior.validate();
  eval.split.validate();
}

json PipelineConfig::to_json() const {
  auto stage = [](TrainConfig t) {
    json j = t.to_json();
    j.erase("seed");
    j.erase("workers");
    return j;
  };
  json n = noise.to_json();
  n.erase("seed");
  return {{"corpus", corpus},
          {"complexes", complexes},
          {"out", out},
          {"seed", seed},
          {"workers", workers},
          {"shred", shred.to_json()},
          {"vocab_shreds", vocab_shreds},
          {"d", d},
          {"train_2d", stage(train_2d)},
          {"recalibrate", stage(recalibrate)},
          {"train_3d", stage(train_3d)},
          {"noise", n},
          {"prior", prior.to_json()},
          {"eval",
           {{"k_neg", eval.k_neg},
            {"test_fraction", eval.test_fraction},
            {"close_cut", eval.split.close_cut},
            {"far_cut", eval.split.far_cut},
            {"kernel_contexts", eval.kernel_contexts}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j, const std::string& base_dir) {
  PipelineConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = *it;
    if (k == "corpus") c.corpus = resolve(base_dir, v.get<std::string>());
    else if (k == "complexes") c.complexes = resolve(base_dir, v.get<std::string>());
    else if (k == "out") c.out = v.get<std::string>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "workers") c.workers = v.get<int>();
    else if (k == "shred") c.shred = ShredPolicy::from_json(v);
    else if (k == "vocab_shreds") c.vocab_shreds = v.get<int>();
    else if (k == "d") c.d = v.get<std::size_t>();
    else if (k == "train_2d") c.train_2d = stage_from_json(v, c.train_2d, k);
    else if (k == "recalibrate") c.recalibrate = stage_from_json(v, c.recalibrate, k);
    else if (k == "train_3d") c.train_3d = stage_from_json(v, c.train_3d, k);
    else if (k == "noise") {
      if (v.contains("seed")) throw Error("noise: the seed is set at the top level of the config");
      c.noise = NoiseConfig::from_json(v);
    } else if (k == "prior") c.prior = PriorParams::from_json(v);
    else if (k == "eval") {
      for (auto e = v.begin(); e != v.end(); ++e) {
        if (e.key() == "k_neg") c.eval.k_neg = e->get<int>();
        else if (e.key() == "test_fraction") c.eval.test_fraction = e->get<double>();
        else if (e.key() == "close_cut") c.eval.split.close_cut = e->get<double>();
        else if (e.key() == "far_cut") c.eval.split.far_cut = e->get<double>();
        else if (e.key() == "kernel_contexts") c.eval.kernel_contexts = e->get<std::size_t>();
        else throw Error("unknown eval option '" + e.key() + "'");
      }
    } else {
      throw Error("unknown config key '" + k + "'");
    }
  }
  c.apply_overrides(std::nullopt, std::nullopt);
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("config " + path + ": " + e.what());
  }
  return from_json(j, fs::path(path).parent_path().string());
}

std::string PipelineConfig::hash() const {
  json j = to_json();
  j.erase("out");
  j.erase("workers");
  j.erase("corpus");
  j.erase("complexes");
  return to_hex(fnv1a(j.dump()));
}

void PipelineConfig::apply_overrides(std::optional<std::uint64_t> s, std::optional<int> w) {
  if (s) seed = *s;
  if (w) workers = *w;
  for (auto* t : {&train_2d, &recalibrate, &train_3d}) t->workers = workers;
  train_2d.seed = derive_seed(seed, 2);
  recalibrate.seed = derive_seed(seed, 22);
  train_3d.seed = derive_seed(seed, 3);
  noise.seed = derive_seed(seed, 4);
}

std::string file_fingerprint(const std::string& path) { return to_hex(fnv1a(read_file(path))); }

void write_artifact(const std::string& path, const std::string& kind, const std::string& config_hash,
                    const std::map<std::string, std::string>& inputs, const json& payload) {
  json j{{"kind", kind}, {"config_hash", config_hash}, {"inputs", inputs}, {"payload", payload}};
  write_file(path, j.dump(1) + "\n");
}

json read_artifact(const std::string& path, const std::string& kind) {
  if (!fs::exists(path)) throw FingerprintError("missing artifact " + path + " (" + kind + ")");
  json j = json::parse(read_file(path));
  if (j.value("kind", "") != kind)
    throw FingerprintError(path + " is a '" + j.value("kind", "") + "' artifact, expected '" + kind + "'");
  return j;
}

// ---- pipeline ----------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig cfg, Log log) : cfg_(std::move(cfg)), log_(std::move(log)) {
  cfg_.validate();
  fs::create_directories(cfg_.out);
}

std::string Pipeline::path(const std::string& name) const { return (fs::path(cfg_.out) / name).string(); }

void Pipeline::note(const std::string& msg) const {
  if (log_) log_(msg);
}

void Pipeline::load_inputs() {
  if (loaded_) return;
  corpus_ = read_smiles_corpus(cfg_.corpus);
  complexes_ = load_complexes(cfg_.complexes);
  if (corpus_.empty()) throw Error("empty corpus " + cfg_.corpus);
  if (complexes_.empty()) throw Error("no complexes in " + cfg_.complexes);
  loaded_ = true;
}

namespace {

// Verifies that every recorded input still has the recorded fingerprint.
void check_inputs(const Pipeline& p, const json& inputs) {
  for (auto it = inputs.begin(); it != inputs.end(); ++it) {
    const std::string& name = it.key();
    std::string file;
    if (name == "corpus") file = p.config().corpus;
    else if (name == "complexes") file = p.config().complexes;
    else file = p.path(name);
    if (!fs::exists(file)) throw FingerprintError("input " + name + " is missing; rerun the earlier stage");
    if (file_fingerprint(file) != it->get<std::string>())
      throw FingerprintError("input " + name + " changed since this artifact was built; rerun the later stages");
  }
}

Checkpoint load_stage_checkpoint(const Pipeline& p, const std::string& file, const std::string& stage) {
  if (!fs::exists(file)) throw FingerprintError("missing " + file + "; run " + stage + " first");
  Checkpoint c = Checkpoint::load(file);
  const std::string got = c.meta.value("stage", "");
  if (got != stage)
    throw FingerprintError(file + " comes from stage '" + got + "', expected '" + stage + "'");
  check_inputs(p, c.meta.value("inputs", json::object()));
  return c;
}

}  // namespace

Vocabulary Pipeline::load_vocab(const std::string& which) const {
  const auto j = read_artifact(path("vocab_" + which + ".json"), "vocabulary");
  check_inputs(*this, j.at("inputs"));
  if (j.at("payload").at("policy_fingerprint") != cfg_.shred.fingerprint())
    throw FingerprintError("vocabulary was built with a different shred policy");
  return Vocabulary::from_json(j.at("payload").at("vocabulary"));
}

std::vector<Complex> Pipeline::load_split(bool test) const {
  const auto j = read_artifact(path("split.json"), "split");
  check_inputs(*this, j.at("inputs"));
  const auto ids = j.at("payload").at(test ? "test" : "train").get<std::vector<std::string>>();
  const std::set<std::string> want(ids.begin(), ids.end());
  std::vector<Complex> out;
  for (auto& c : load_complexes(cfg_.complexes))
    if (want.count(c.id)) out.push_back(std::move(c));
  return out;
}

Model2D Pipeline::load_model2d(bool recalibrated) const {
  return Model2D::from_checkpoint(recalibrated ? load_stage_checkpoint(*this, path("model2d_recal.json"), "recalibrate")
                                               : load_stage_checkpoint(*this, path("model2d.json"), "train-2d"));
}

Model3D Pipeline::load_model3d() const {
  return Model3D::from_checkpoint(load_stage_checkpoint(*this, path("model3d.json"), "train-3d"));
}

void Pipeline::build_vocab() {
  load_inputs();
  note("build-vocab: " + std::to_string(corpus_.size()) + " molecules, " + std::to_string(complexes_.size()) +
       " complexes");
  const auto& policy = cfg_.shred;
  const auto va = build_vocabulary(corpus_, policy, cfg_.vocab_shreds, cfg_.workers);
  write_artifact(path("vocab_a.json"), "vocabulary", cfg_.hash(), {{"corpus", file_fingerprint(cfg_.corpus)}},
                 {{"policy_fingerprint", policy.fingerprint()}, {"vocabulary", va.to_json()}});

  // family-tag split of the complexes
  std::vector<std::string> tags;
  for (const auto& c : complexes_)
    if (std::find(tags.begin(), tags.end(), c.family_tag) == tags.end()) tags.push_back(c.family_tag);
  std::sort(tags.begin(), tags.end());
  std::set<std::string> test_tags;
  if (tags.size() >= 2) {
    const auto [tr, te] = split_units(tags.size(), cfg_.eval.test_fraction, derive_seed(cfg_.seed, 5));
    for (auto i : te) test_tags.insert(tags[i]);
  }
  json train = json::array(), test = json::array();
  std::vector<MolGraph> ligs;
  for (const auto& c : complexes_) {
    const bool is_test = test_tags.count(c.family_tag) > 0;
    (is_test ? test : train).push_back(c.id);
    if (!is_test) ligs.push_back(c.ligand);
  }
  if (ligs.empty()) throw Error("the split left no training complexes");
  write_artifact(path("split.json"), "split", cfg_.hash(), {{"complexes", file_fingerprint(cfg_.complexes)}},
                 {{"test_tags", test_tags}, {"train", train}, {"test", test}});
  const auto vb = build_vocabulary(ligs, policy, cfg_.vocab_shreds, cfg_.workers);
  write_artifact(path("vocab_b.json"), "vocabulary", cfg_.hash(),
                 {{"complexes", file_fingerprint(cfg_.complexes)}, {"split.json", file_fingerprint(path("split.json"))}},
                 {{"policy_fingerprint", policy.fingerprint()}, {"vocabulary", vb.to_json()}});
  note("build-vocab: |V| = " + std::to_string(va.size()) + ", |V'| = " + std::to_string(vb.size()) + ", " +
       std::to_string(train.size()) + " train / " + std::to_string(test.size()) + " test complexes");
}

void Pipeline::train_2d() {
  load_inputs();
  const auto va = load_vocab("a");
  Model2DConfig mc;
  mc.d = cfg_.d;
  mc.init_seed = derive_seed(cfg_.seed, 20);
  Model2D m(va, cfg_.shred.fingerprint(), mc);
  const FrequencyBaseline gp(va);
  note("train-2d: " + std::to_string(cfg_.train_2d.max_epochs) + " epochs max");
  const auto rep = pqr::train_2d(m, corpus_, cfg_.shred, gp, cfg_.train_2d);
  auto ck = m.to_checkpoint();
  ck.meta["stage"] = "train-2d";
  ck.meta["config_hash"] = cfg_.hash();
  ck.meta["inputs"] = {{"vocab_a.json", file_fingerprint(path("vocab_a.json"))},
                       {"corpus", file_fingerprint(cfg_.corpus)}};
  ck.meta["report"] = rep.to_json();
  ck.save(path("model2d.json"));
  note("train-2d: " + std::to_string(rep.epochs.size()) + " epochs, best " + std::to_string(rep.best_epoch));
}

void Pipeline::recalibrate() {
  auto m = load_model2d(false);
  const auto vb = load_vocab("b");
  const auto train = load_split(false);
  std::vector<MolGraph> ligs;
  for (const auto& c : train) ligs.push_back(c.ligand);
  note("recalibrate: " + std::to_string(cfg_.recalibrate.max_epochs) + " epochs on " + std::to_string(ligs.size()) +
       " ligands");
  const auto rep = pqr::recalibrate(m, ligs, vb, cfg_.shred, cfg_.recalibrate);
  auto ck = m.to_checkpoint();
  ck.meta["stage"] = "recalibrate";
  ck.meta["config_hash"] = cfg_.hash();
  ck.meta["inputs"] = {{"model2d.json", file_fingerprint(path("model2d.json"))},
                       {"vocab_b.json", file_fingerprint(path("vocab_b.json"))},
                       {"split.json", file_fingerprint(path("split.json"))}};
  ck.meta["report"] = rep.to_json();
  ck.save(path("model2d_recal.json"));
}

void Pipeline::train_3d(const std::string& baseline) {
  const std::string base_file = baseline.empty() ? path("model2d_recal.json") : baseline;
  if (!fs::exists(base_file))
    throw FingerprintError("train-3d needs the recalibrated 2D model (" + base_file + "); run recalibrate first");
  const Checkpoint bc = Checkpoint::load(base_file);
  if (bc.meta.value("stage", "") != "recalibrate")
    throw FingerprintError("train-3d baseline " + base_file + " comes from stage '" + bc.meta.value("stage", "") +
                           "'; the 3D stage needs the recalibrated model");
  check_inputs(*this, bc.meta.value("inputs", json::object()));
  const Model2D m2 = Model2D::from_checkpoint(bc);
  const auto vb = load_vocab("b");
  if (m2.vocab_hash() != vb.hash()) throw FingerprintError("baseline vocabulary differs from the complex vocabulary");
  const auto train = load_split(false);
  Model3DConfig mc;
  mc.d = cfg_.d;
  mc.init_seed = derive_seed(cfg_.seed, 30);
  mc.prior = cfg_.prior;
  Model3D m3(vb, cfg_.shred.fingerprint(), mc);
  m3.init_encoder_from(m2);
  note("train-3d: " + std::to_string(train.size()) + " complexes, " + std::to_string(cfg_.train_3d.max_epochs) +
       " epochs max");
  const auto rep = pqr::train_3d(m3, train, m2, cfg_.shred, cfg_.noise, cfg_.train_3d);
  auto ck = m3.to_checkpoint();
  ck.meta["stage"] = "train-3d";
  ck.meta["config_hash"] = cfg_.hash();
  ck.meta["inputs"] = {{"model2d_recal.json", file_fingerprint(base_file)},
                       {"vocab_b.json", file_fingerprint(path("vocab_b.json"))},
                       {"split.json", file_fingerprint(path("split.json"))}};
  ck.meta["report"] = rep.to_json();
  ck.save(path("model3d.json"));
  note("train-3d: " + std::to_string(rep.epochs.size()) + " epochs, best " + std::to_string(rep.best_epoch));
}

std::vector<TestStep> Pipeline::test_steps() const {
  const auto vb = load_vocab("b");
  const auto test = load_split(true);
  return test_steps_from_complexes(test, vb, cfg_.shred, derive_seed(cfg_.seed, 6));
}

std::string auc_table(const json& summary) {
  const auto& auc = summary.at("auc");
  std::ostringstream tab;
  tab << std::fixed << std::setprecision(3) << "AUC      0D      1D      2D\n";
  for (const char* m : {"1D", "2D", "3D"}) {
    tab << m << "  ";
    for (const char* b : {"0D", "1D", "2D"}) tab << "  " << auc.at(std::string(m) + "_over_" + b).at("auc").get<double>();
    tab << '\n';
  }
  return tab.str();
}

json Pipeline::evaluate() {
  const auto m2 = load_model2d(false);
  const auto m2r = load_model2d(true);
  const auto m3 = load_model3d();
  const auto vb = load_vocab("b");
  if (m2r.vocab_hash() != vb.hash() || m3.vocab_hash() != vb.hash())
    throw FingerprintError("models and complex vocabulary disagree");
  const auto steps = test_steps();
  if (steps.empty()) throw Error("no test steps");
  fs::create_directories(path("eval"));

  const std::vector<LevelModel> levels{LevelModel::uniform(vb), LevelModel::frequency(vb), LevelModel::two_d(m2r),
                                       LevelModel::three_d(m2r, m3)};
  std::vector<std::vector<std::vector<double>>> dist;
  for (const auto& l : levels) dist.push_back(level_distributions(l, steps));
  const auto split = close_far_split(steps, cfg_.eval.split);

  json summary{{"n_test_steps", steps.size()},
               {"n_close", split.close.size()},
               {"n_far", split.far.size()},
               {"n_neither", split.neither.size()}};
  json& auc = summary["auc"];
  auto emit = [&](const std::string& name, const RocResult& r) {
    json j = r.to_json();
    write_file(path("eval/roc_" + name + ".json"), j.dump(1) + "\n");
    write_file(path("eval/" + std::string("roc_") + name + ".csv"), r.curve_csv());
    auc[name] = {{"auc", r.auc}, {"stderr", r.stderr_auc}, {"n_pos", r.n_pos}, {"n_neg", r.n_neg}};
  };
  for (int mi = 1; mi <= 3; ++mi)
    for (int bi = 0; bi <= 2; ++bi) {
      const std::string name = levels[mi].name() + "_over_" + levels[bi].name();
      Rng rng(derive_seed(cfg_.seed, 100 + 10 * mi + bi));
      emit(name, roc_from_distributions(dist[mi], dist[bi], steps, cfg_.eval.k_neg, rng));
      if (mi != 3) continue;
      for (const auto& [part, idx] : {std::pair{"close", &split.close}, std::pair{"far", &split.far}}) {
        if (idx->empty()) continue;
        const auto sub_m = subset<std::vector<double>>(dist[mi], *idx);
        const auto sub_b = subset<std::vector<double>>(dist[bi], *idx);
        const auto sub_s = subset<TestStep>(steps, *idx);
        Rng r2(derive_seed(cfg_.seed, 200 + 10 * mi + bi + (std::string(part) == "far" ? 1000 : 0)));
        try {
          emit(name + "_" + part, roc_from_distributions(sub_m, sub_b, sub_s, cfg_.eval.k_neg, r2));
        } catch (const Error& e) {
          note(std::string("evaluate: ") + part + " subset of " + name + " skipped: " + e.what());
        }
      }
    }
  Rng nr(derive_seed(cfg_.seed, 300));
  const auto nm = null_metrics(vb, steps, cfg_.eval.k_neg, nr);
  summary["null_metrics"] = nm.to_json();
  summary["recalibration"] = {{"kl_before", smoothed_kl(top1_marginal(m2, steps), vb)},
                              {"kl_after", smoothed_kl(top1_marginal(m2r, steps), vb)}};
  write_artifact(path("eval/eval.json"), "evaluation", cfg_.hash(),
                 {{"model2d.json", file_fingerprint(path("model2d.json"))},
                  {"model2d_recal.json", file_fingerprint(path("model2d_recal.json"))},
                  {"model3d.json", file_fingerprint(path("model3d.json"))}},
                 summary);

  return summary;
}

json Pipeline::report() {
  const auto m2r = load_model2d(true);
  const auto m3 = load_model3d();
  const auto steps = test_steps();
  const auto rep = entropy_shift_report(steps, m2r, m3);
  const json s = rep.summary();
  write_artifact(path("entropy_shift.json"), "entropy-shift", cfg_.hash(),
                 {{"model2d_recal.json", file_fingerprint(path("model2d_recal.json"))},
                  {"model3d.json", file_fingerprint(path("model3d.json"))}},
                 s);
  write_file(path("entropy_shift.csv"), rep.to_csv());
  note("report: mean entropy change q " + std::to_string(s["mean_delta"]["q"].get<double>()) + ", r " +
       std::to_string(s["mean_delta"]["r"].get<double>()) + ", p " + std::to_string(s["mean_delta"]["p"].get<double>()));
  return s;
}

void Pipeline::kernel() {
  load_inputs();
  const auto m2r = load_model2d(true);
  Rng rng(derive_seed(cfg_.seed, 7));
  std::vector<GrowthContext> ctx;
  while (ctx.size() < cfg_.eval.kernel_contexts) {
    const auto& g = corpus_[uniform_index(rng, corpus_.size())];
    const int a = static_cast<int>(uniform_index(rng, g.num_atoms()));
    if (g.atom(a).n_hydrogens > 0) ctx.push_back({g, a});
  }
  const auto k = score_kernel(m2r, ctx);
  write_file(path("kernel.csv"), k.to_csv(false));
  write_file(path("distance.csv"), k.to_csv(true));
  write_artifact(path("kernel.json"), "kernel", cfg_.hash(),
                 {{"model2d_recal.json", file_fingerprint(path("model2d_recal.json"))}},
                 {{"n_contexts", ctx.size()}, {"keys", k.keys}, {"floored", k.floored}});
  note("kernel: " + std::to_string(k.keys.size()) + " motifs over " + std::to_string(ctx.size()) + " contexts");
}

json Pipeline::run_all() {
  build_vocab();
  train_2d();
  recalibrate();
  train_3d();
  json s = evaluate();
  s["entropy_shift"] = report();
  kernel();
  return s;
}

// ---- fixtures ----------------------------------------------------------------

std::vector<std::string> write_fixtures(const std::string& dir, const FixtureSpec& spec) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto smi_file = [&](const std::string& name, const std::vector<MolGraph>& mols, const std::string& header) {
    std::ostringstream os;
    os << "# " << header << '\n';
    for (const auto& g : mols) os << write_smiles(g) << '\n';
    const auto p = (fs::path(dir) / name).string();
    write_file(p, os.str());
    written.push_back(p);
  };
  Rng r1(derive_seed(spec.seed, 1));
  smi_file("corpus.smi", synth_corpus(spec.n_molecules, r1), "synthetic drug-like corpus");

  Rng r2(derive_seed(spec.seed, 2));
  const auto ligs = synth_corpus(spec.n_complexes, r2);
  std::vector<Complex> cs;
  for (std::size_t i = 0; i < ligs.size(); ++i) {
    std::ostringstream id;
    id << "cx" << std::setw(3) << std::setfill('0') << i;
    cs.push_back(synth_complex(ligs[i], id.str(), r2));
  }
  write_complexes((fs::path(dir) / "complexes.jsonl").string(), cs);
  written.push_back((fs::path(dir) / "complexes.jsonl").string());

  Rng r3(derive_seed(spec.seed, 3));
  const auto shift = planted_shift_corpora(spec.n_shift, spec.n_shift, r3);
  smi_file("shift_a.smi", shift.a, "planted shift, corpus A");
  smi_file("shift_b.smi", shift.b, "planted shift, corpus B");

  Rng r4(derive_seed(spec.seed, 4));
  const auto planted = planted_3d_task(spec.n_planted3d, r4);
  write_complexes((fs::path(dir) / "planted3d.jsonl").string(), planted.complexes);
  written.push_back((fs::path(dir) / "planted3d.jsonl").string());

  PipelineConfig cfg;
  cfg.corpus = "corpus.smi";
  cfg.complexes = "complexes.jsonl";
  cfg.seed = spec.seed;
  cfg.d = 32;
  json j = cfg.to_json();
  j.erase("workers");
  const auto p = (fs::path(dir) / "pipeline.json").string();
  write_file(p, j.dump(2) + "\n");
  written.push_back(p);
  return written;
}

}  // namespace pqr
