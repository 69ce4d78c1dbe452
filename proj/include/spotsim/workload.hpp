#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "spotsim/earlycurve.hpp"
#include "spotsim/market.hpp"

namespace spotsim::workload {

inline constexpr double kNoticeCheckpointBudget = 120.0;  // seconds

// Generator spec for one hyper-parameter setting's metric curve: staged
// reciprocal-quadratic truth plus multiplicative noise.
struct SyntheticModelSpec {
  std::string hp_id;
  std::vector<earlycurve::Stage> stages;  // partition [0, horizon)
  double noise_sigma = 0.0;
  long cadence = 1;  // steps per metric point
  std::uint64_t seed = 0;

  long horizon() const { return stages.empty() ? 0 : stages.back().right; }
};

// Per-instance seconds-per-step with bounded multiplicative jitter.
struct PerfProfile {
  std::map<std::string, double> base_spb;  // instance -> seconds per step
  double jitter_cov = 0.0;                 // coefficient of variation, <= 0.1
};

struct CheckpointProfile {
  double model_size_mb = 0.0;
  std::map<std::string, double> speed_mb_per_s;  // instance -> rate
};

// Noiseless metric value of the generator at step k (final-stage formula
// beyond the horizon).
double true_metric(const SyntheticModelSpec& spec, long k);

// Points at steps 0, cadence, 2*cadence, ... up to and including upto_step.
// Noise is a truncated Normal(0, sigma) multiplicative factor; values stay
// positive and within five sigmas of the noiseless curve. Deterministic for
// a fixed spec seed.
earlycurve::MetricTrace gen_curve(const SyntheticModelSpec& spec,
                                  long upto_step);

// One step's duration: base seconds-per-step scaled by a lognormal jitter
// whose mean is one and whose coefficient of variation matches the profile.
double step_duration(const PerfProfile& profile, const std::string& instance,
                     std::mt19937_64& rng);

struct CheckpointTime {
  double seconds = 0.0;
  bool feasible = true;  // fits inside the revocation-notice budget
};

CheckpointTime checkpoint_time(const CheckpointProfile& profile,
                               const std::string& instance);

// Reads and validates a recorded step/metric file.
earlycurve::MetricTrace replay_trace(std::istream& in);

// One tuning workload: a family of hyper-parameter settings sharing a
// performance and checkpoint profile.
struct Workload {
  std::string name;
  std::vector<SyntheticModelSpec> models;
  PerfProfile perf;
  CheckpointProfile checkpoint;
};

struct Bundle {
  std::uint64_t seed = 0;
  std::vector<Workload> groups;
};

// Demo bundle: six algorithm families with sixteen hyper-parameter settings
// each, coefficients randomized per seed.
Bundle default_bundle(const market::Catalog& catalog, std::uint64_t seed,
                      long horizon = 1000);

void write_bundle_json(std::ostream& out, const Bundle& bundle);
Bundle read_bundle_json(std::istream& in);

}  // namespace spotsim::workload
