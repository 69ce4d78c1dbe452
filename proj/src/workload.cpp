#include "spotsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace spotsim::workload {

double true_metric(const SyntheticModelSpec& spec, long k) {
  earlycurve::StagedCurve curve{spec.stages, spec.horizon()};
  return earlycurve::predict_metric(curve, k);
}

earlycurve::MetricTrace gen_curve(const SyntheticModelSpec& spec,
                                  long upto_step) {
  if (spec.stages.empty()) throw DataError("model spec has no stages");
  if (spec.noise_sigma < 0.0) throw DataError("noise sigma must be >= 0");
  long cursor = 0;
  for (const auto& st : spec.stages) {
    if (st.left != cursor || st.right <= st.left) {
      throw DataError("stages must partition the horizon contiguously");
    }
    cursor = st.right;
  }
  if (upto_step > spec.horizon()) {
    throw DataError("requested step " + std::to_string(upto_step) +
                    " beyond spec horizon " + std::to_string(spec.horizon()));
  }
  const long cadence = std::max<long>(1, spec.cadence);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  earlycurve::MetricTrace trace;
  trace.points.reserve(static_cast<std::size_t>(upto_step / cadence) + 1);
  for (long k = 0; k <= upto_step; k += cadence) {
    const double base = true_metric(spec, k);
    double factor = 1.0;
    if (spec.noise_sigma > 0.0) {
      double eta;
      do {
        eta = noise(rng) * spec.noise_sigma;
      } while (std::abs(eta) > 5.0 * spec.noise_sigma || 1.0 + eta <= 1e-9);
      factor = 1.0 + eta;
    }
    trace.points.push_back({k, base * factor});
  }
  return trace;
}

double step_duration(const PerfProfile& profile, const std::string& instance,
                     std::mt19937_64& rng) {
  if (profile.jitter_cov < 0.0 || profile.jitter_cov > 0.1) {
    throw DataError("step-duration jitter must stay within a 0.1 COV");
  }
  auto it = profile.base_spb.find(instance);
  if (it == profile.base_spb.end()) {
    throw DataError("no performance entry for instance " + instance);
  }
  if (!(it->second > 0.0)) {
    throw DataError("seconds-per-step must be positive for " + instance);
  }
  if (profile.jitter_cov <= 0.0) return it->second;
  // Lognormal with unit mean and the configured coefficient of variation.
  const double s2 = std::log(1.0 + profile.jitter_cov * profile.jitter_cov);
  std::lognormal_distribution<double> jitter(-0.5 * s2, std::sqrt(s2));
  return it->second * jitter(rng);
}

CheckpointTime checkpoint_time(const CheckpointProfile& profile,
                               const std::string& instance) {
  auto it = profile.speed_mb_per_s.find(instance);
  if (it == profile.speed_mb_per_s.end()) {
    throw DataError("no checkpoint speed for instance " + instance);
  }
  if (!(profile.model_size_mb > 0.0) || !(it->second > 0.0)) {
    throw DataError("checkpoint sizes and speeds must be positive");
  }
  CheckpointTime ct;
  ct.seconds = profile.model_size_mb / it->second;
  ct.feasible = ct.seconds <= kNoticeCheckpointBudget;
  return ct;
}

earlycurve::MetricTrace replay_trace(std::istream& in) {
  return earlycurve::read_metric_csv(in);
}

Bundle default_bundle(const market::Catalog& catalog, std::uint64_t seed,
                      long horizon) {
  // Family shapes loosely follow common tuning benchmarks: a mix of
  // single-stage decays and two-stage curves with a mid-run drop.
  struct Family {
    const char* name;
    bool two_stage;
    double size_mb;
  };
  const Family families[] = {
      {"lor", false, 80.0},     {"svm", false, 120.0},
      {"gbtr", false, 200.0},   {"lir", false, 60.0},
      {"alexnet", true, 900.0}, {"resnet", true, 1400.0},
  };

  Bundle bundle;
  bundle.seed = seed;
  for (const auto& fam : families) {
    std::mt19937_64 rng(mix_seed(seed, std::string("bundle/") + fam.name));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Workload group;
    group.name = fam.name;
    for (int h = 0; h < 16; ++h) {
      SyntheticModelSpec spec;
      char id[32];
      std::snprintf(id, sizeof(id), "%s/hp%02d", fam.name, h);
      spec.hp_id = id;
      spec.seed = mix_seed(seed, spec.hp_id);
      spec.noise_sigma = 0.05;
      spec.cadence = 1;

      const double a3 = 0.05 + 0.45 * unit(rng);
      const double a1 = 0.002 + 0.02 * unit(rng);
      const double a2 = 0.4 + 0.8 * unit(rng);
      if (!fam.two_stage) {
        spec.stages.push_back({0, horizon, 0.0, a1, a2, a3});
      } else {
        // Learning-rate-decay shape: the curve drops to 40% of its value at
        // the split and keeps decaying gently from there.
        const long split = horizon / 2 + static_cast<long>(
                               (unit(rng) - 0.5) * 0.2 * horizon);
        const double ks = static_cast<double>(split);
        const double v_pre = 1.0 / (a1 * ks + a2) + a3 + 0.3;
        const double v_post = 0.4 * v_pre;
        spec.stages.push_back({0, split, 0.0, a1, a2, a3 + 0.3});
        spec.stages.push_back({split, horizon, 0.0, 1.0 / (v_post * ks),
                               1.5 / v_post, 0.6 * v_post});
      }
      group.models.push_back(std::move(spec));
    }

    for (const auto& inst : catalog.instances()) {
      // Step time shrinks sublinearly with core count; the per-instance
      // perturbation lets pricier instances lose occasionally, which real
      // profiles do.
      const double base = 18.0 + 30.0 * unit(rng);
      const double perturb = 0.8 + 0.4 * unit(rng);
      group.perf.base_spb[inst.name] =
          base * perturb / std::pow(static_cast<double>(inst.cpus), 0.7);
      group.checkpoint.speed_mb_per_s[inst.name] =
          62.83 * std::pow(static_cast<double>(inst.cpus), 0.2738);
    }
    group.perf.jitter_cov = 0.05;
    group.checkpoint.model_size_mb = fam.size_mb;
    bundle.groups.push_back(std::move(group));
  }
  return bundle;
}

void write_bundle_json(std::ostream& out, const Bundle& bundle) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : bundle.groups) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : g.models) {
      nlohmann::json stages = nlohmann::json::array();
      for (const auto& st : m.stages) {
        stages.push_back({{"left", st.left},
                          {"right", st.right},
                          {"a0", st.a0},
                          {"a1", st.a1},
                          {"a2", st.a2},
                          {"a3", st.a3}});
      }
      models.push_back({{"hp_id", m.hp_id},
                        {"stages", stages},
                        {"noise_sigma", m.noise_sigma},
                        {"cadence", m.cadence},
                        {"seed", m.seed}});
    }
    groups.push_back({{"name", g.name},
                      {"models", models},
                      {"perf",
                       {{"base_spb", g.perf.base_spb},
                        {"jitter_cov", g.perf.jitter_cov}}},
                      {"checkpoint",
                       {{"model_size_mb", g.checkpoint.model_size_mb},
                        {"speed_mb_per_s", g.checkpoint.speed_mb_per_s}}}});
  }
  nlohmann::json doc{{"seed", bundle.seed}, {"groups", groups}};
  out << doc.dump(2) << '\n';
}

Bundle read_bundle_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad bundle file: ") + e.what());
  }
  Bundle bundle;
  try {
    bundle.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& g : doc.at("groups")) {
      Workload group;
      group.name = g.at("name").get<std::string>();
      for (const auto& m : g.at("models")) {
        SyntheticModelSpec spec;
        spec.hp_id = m.at("hp_id").get<std::string>();
        spec.noise_sigma = m.at("noise_sigma").get<double>();
        spec.cadence = m.at("cadence").get<long>();
        spec.seed = m.at("seed").get<std::uint64_t>();
        for (const auto& s : m.at("stages")) {
          earlycurve::Stage st;
          st.left = s.at("left").get<long>();
          st.right = s.at("right").get<long>();
          st.a0 = s.at("a0").get<double>();
          st.a1 = s.at("a1").get<double>();
          st.a2 = s.at("a2").get<double>();
          st.a3 = s.at("a3").get<double>();
          spec.stages.push_back(st);
        }
        group.models.push_back(std::move(spec));
      }
      group.perf.base_spb =
          g.at("perf").at("base_spb").get<std::map<std::string, double>>();
      group.perf.jitter_cov = g.at("perf").at("jitter_cov").get<double>();
      group.checkpoint.model_size_mb =
          g.at("checkpoint").at("model_size_mb").get<double>();
      group.checkpoint.speed_mb_per_s =
          g.at("checkpoint")
              .at("speed_mb_per_s")
              .get<std::map<std::string, double>>();
      bundle.groups.push_back(std::move(group));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad bundle file: ") + e.what());
  }
  return bundle;
}

}  // namespace spotsim::workload
