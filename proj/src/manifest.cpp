#include "spotsim/manifest.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spotsim/util.hpp"

namespace spotsim::manifest {

std::string RunManifest::resolved_json() const {
  nlohmann::json doc{
      {"seed", seed},
      {"sim",
       {{"metric", sim.metric},
        {"max_trial_steps", sim.max_trial_steps},
        {"theta", sim.theta},
        {"mcnt", sim.mcnt},
        {"c0", sim.c0},
        {"poll_interval", sim.poll_interval},
        {"notice_lead", sim.notice_lead},
        {"rotation_limit", sim.rotation_limit},
        {"literal_matrix_init", sim.literal_matrix_init},
        {"direction",
         sim.direction == earlycurve::Direction::minimize ? "minimize"
                                                          : "maximize"}}},
      {"fit",
       {{"xi", sim.fit.xi},
        {"epsilon", sim.fit.epsilon},
        {"steadiness_window", sim.fit.steadiness_window},
        {"a3_grid", sim.fit.a3_grid},
        {"refine_a3", sim.fit.refine_a3},
        {"theta", sim.fit.theta}}},
      {"train",
       {{"architecture", train.architecture},
        {"epochs", train.epochs},
        {"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"hidden", train.hidden},
        {"lstm_layers", train.lstm_layers},
        {"dense_dim", train.dense_dim},
        {"stride", dataset_stride},
        {"literal_trim_denominator", literal_trim_denominator}}},
      {"paths",
       {{"trace_dir", trace_dir.string()},
        {"bundle", bundle.string()},
        {"predictor_dir", predictor_dir.string()},
        {"output_dir", output_dir.string()},
        {"catalog", catalog.string()}}}};
  return doc.dump();
}

std::string RunManifest::config_hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved_json())));
  return buf;
}

namespace {

template <typename T>
void maybe(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void maybe_path(const nlohmann::json& obj, const char* key,
                std::filesystem::path& out) {
  if (obj.contains(key)) out = obj.at(key).get<std::string>();
}

}  // namespace

RunManifest load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad config file " + path.string() + ": " + e.what());
  }

  RunManifest m;
  m.config_path = path;
  try {
    maybe(doc, "seed", m.seed);
    if (doc.contains("sim")) {
      const auto& s = doc.at("sim");
      maybe(s, "metric", m.sim.metric);
      maybe(s, "max_trial_steps", m.sim.max_trial_steps);
      maybe(s, "theta", m.sim.theta);
      maybe(s, "mcnt", m.sim.mcnt);
      maybe(s, "c0", m.sim.c0);
      maybe(s, "poll_interval", m.sim.poll_interval);
      maybe(s, "notice_lead", m.sim.notice_lead);
      maybe(s, "rotation_limit", m.sim.rotation_limit);
      maybe(s, "literal_matrix_init", m.sim.literal_matrix_init);
      if (s.contains("direction")) {
        const std::string d = s.at("direction").get<std::string>();
        if (d == "minimize") {
          m.sim.direction = earlycurve::Direction::minimize;
        } else if (d == "maximize") {
          m.sim.direction = earlycurve::Direction::maximize;
        } else {
          throw DataError("direction must be minimize or maximize");
        }
      }
    }
    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      maybe(f, "xi", m.sim.fit.xi);
      maybe(f, "epsilon", m.sim.fit.epsilon);
      maybe(f, "steadiness_window", m.sim.fit.steadiness_window);
      maybe(f, "a3_grid", m.sim.fit.a3_grid);
      maybe(f, "refine_a3", m.sim.fit.refine_a3);
    }
    if (doc.contains("train")) {
      const auto& t = doc.at("train");
      maybe(t, "architecture", m.train.architecture);
      maybe(t, "epochs", m.train.epochs);
      maybe(t, "learning_rate", m.train.learning_rate);
      maybe(t, "batch_size", m.train.batch_size);
      maybe(t, "hidden", m.train.hidden);
      maybe(t, "lstm_layers", m.train.lstm_layers);
      maybe(t, "dense_dim", m.train.dense_dim);
      maybe(t, "stride", m.dataset_stride);
      maybe(t, "literal_trim_denominator", m.literal_trim_denominator);
    }
    if (doc.contains("paths")) {
      const auto& p = doc.at("paths");
      maybe_path(p, "trace_dir", m.trace_dir);
      maybe_path(p, "bundle", m.bundle);
      maybe_path(p, "predictor_dir", m.predictor_dir);
      maybe_path(p, "output_dir", m.output_dir);
      maybe_path(p, "catalog", m.catalog);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad config file " + path.string() + ": " + e.what());
  }
  // Relative paths resolve against the config file's directory.
  const auto base = path.parent_path();
  for (auto* p : {&m.trace_dir, &m.bundle, &m.predictor_dir, &m.output_dir,
                  &m.catalog}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  m.sim.seed = m.seed;
  m.train.seed = m.seed;
  m.sim.fit.theta = m.sim.theta;
  return m;
}

RunManifest default_manifest() {
  if (const char* env = std::getenv(kConfigEnvVar)) {
    if (env[0] != '\0') return load_config(env);
  }
  return RunManifest{};
}

void require_exists(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw DataError(what + " path not set");
  if (!std::filesystem::exists(path)) {
    throw DataError(what + " does not exist: " + path.string());
  }
}

}  // namespace spotsim::manifest
