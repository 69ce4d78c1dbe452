#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "spotsim/workload.hpp"

using namespace spotsim;
using namespace spotsim::workload;

namespace {

SyntheticModelSpec reciprocal_spec(long horizon, double sigma,
                                   std::uint64_t seed) {
  SyntheticModelSpec spec;
  spec.hp_id = "t/hp00";
  spec.stages.push_back({0, horizon, 0.0, 1.0, 1.0, 0.0});  // 1/(k+1)
  spec.noise_sigma = sigma;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("noiseless generation is the exact formula") {
  auto spec = reciprocal_spec(100, 0.0, 1);
  auto trace = gen_curve(spec, 50);
  REQUIRE(trace.size() == 51);
  for (const auto& p : trace.points) {
    CHECK(p.value == doctest::Approx(1.0 / (p.step + 1)).epsilon(1e-12));
  }
}

TEST_CASE("noise stays within five sigmas and keeps values positive") {
  auto spec = reciprocal_spec(2000, 0.01, 3);
  auto trace = gen_curve(spec, 2000);
  for (const auto& p : trace.points) {
    const double truth = 1.0 / (p.step + 1);
    CHECK(p.value > 0.0);
    CHECK(std::abs(p.value / truth - 1.0) <= 5.0 * 0.01 + 1e-12);
  }
}

TEST_CASE("generation is deterministic per seed") {
  auto spec = reciprocal_spec(500, 0.05, 42);
  auto a = gen_curve(spec, 500);
  auto b = gen_curve(spec, 500);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i].value == b.points[i].value);
  }
  spec.seed = 43;
  auto c = gen_curve(spec, 500);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    any_diff = any_diff || a.points[i].value != c.points[i].value;
  }
  CHECK(any_diff);
}

TEST_CASE("generation past the horizon is rejected") {
  auto spec = reciprocal_spec(100, 0.0, 1);
  CHECK_THROWS_AS(gen_curve(spec, 101), DataError);
}

TEST_CASE("cadence thins the emitted points") {
  auto spec = reciprocal_spec(100, 0.0, 1);
  spec.cadence = 10;
  auto trace = gen_curve(spec, 100);
  REQUIRE(trace.size() == 11);
  CHECK(trace.points[1].step == 10);
}

TEST_CASE("step durations are exact without jitter") {
  PerfProfile profile;
  profile.base_spb["r4.large"] = 10.0;
  profile.jitter_cov = 0.0;
  std::mt19937_64 rng(1);
  CHECK(step_duration(profile, "r4.large", rng) == 10.0);
  CHECK_THROWS_AS(step_duration(profile, "unknown", rng), DataError);
}

TEST_CASE("step duration jitter hits the requested mean and spread") {
  PerfProfile profile;
  profile.base_spb["r4.large"] = 10.0;
  profile.jitter_cov = 0.1;
  std::mt19937_64 rng(123);
  const int n = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = step_duration(profile, "r4.large", rng);
    sum += d;
    sumsq += d * d;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  const double cov = std::sqrt(var) / mean;
  CHECK(mean == doctest::Approx(10.0).epsilon(0.01));
  CHECK(cov == doctest::Approx(0.1).epsilon(0.2));
  CHECK(cov <= 0.12);
}

TEST_CASE("checkpoint times follow the size over speed rule") {
  CheckpointProfile profile;
  profile.model_size_mb = 1342.2;
  profile.speed_mb_per_s["m4.4xlarge"] = 134.22;
  auto ct = checkpoint_time(profile, "m4.4xlarge");
  CHECK(ct.seconds == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(ct.feasible);

  // The single-core reference point: 7.36 GB at 62.83 MB/s sits just inside
  // the two-minute notice budget.
  CheckpointProfile micro;
  micro.model_size_mb = 7.36 * 1024.0;
  micro.speed_mb_per_s["t2.micro"] = 62.83;
  auto boundary = checkpoint_time(micro, "t2.micro");
  CHECK(boundary.seconds == doctest::Approx(120.0).epsilon(0.01));
  CHECK(boundary.feasible);

  CheckpointProfile big;
  big.model_size_mb = 20.0 * 1024.0;
  big.speed_mb_per_s["m4.4xlarge"] = 134.22;
  auto infeasible = checkpoint_time(big, "m4.4xlarge");
  CHECK(infeasible.seconds == doctest::Approx(152.6).epsilon(0.01));
  CHECK_FALSE(infeasible.feasible);
}

TEST_CASE("replay validates recorded traces") {
  std::istringstream ok("step,metric\n0,1.0\n1,0.5\n2,0.33\n");
  auto trace = replay_trace(ok);
  CHECK(trace.size() == 3);

  std::istringstream dup("step,metric\n0,1.0\n0,0.5\n");
  CHECK_THROWS_AS(replay_trace(dup), DataError);

  std::istringstream bad("step,metric\n0,1.0\n1,0\n");
  CHECK_THROWS_AS(replay_trace(bad), DataError);
}

TEST_CASE("noiseless generation round-trips through the curve fitter") {
  auto spec = reciprocal_spec(1000, 0.0, 9);
  auto trace = gen_curve(spec, 700);
  earlycurve::FitConfig cfg;
  auto curve = earlycurve::fit_curve(trace, cfg);
  for (long k : {0L, 100L, 700L, 1000L}) {
    CHECK(earlycurve::predict_metric(curve, k) ==
          doctest::Approx(true_metric(spec, k)).epsilon(1e-6));
  }
}

TEST_CASE("default bundle has the documented shape") {
  const auto catalog = market::default_catalog();
  auto bundle = default_bundle(catalog, 7, 1000);
  REQUIRE(bundle.groups.size() == 6);
  for (const auto& group : bundle.groups) {
    CHECK(group.models.size() == 16);
    CHECK(group.perf.base_spb.size() == catalog.instances().size());
    CHECK(group.perf.jitter_cov <= 0.1);
    CHECK(group.checkpoint.model_size_mb > 0.0);
    for (const auto& spec : group.models) {
      REQUIRE_FALSE(spec.stages.empty());
      CHECK(spec.stages.front().left == 0);
      CHECK(spec.stages.back().right == 1000);
      for (const auto& st : spec.stages) {
        CHECK(st.a2 > 0.0);
        CHECK(st.a3 >= 0.0);
      }
      // Every generated curve must be positive at the horizon.
      CHECK(true_metric(spec, 1000) > 0.0);
    }
  }

  // Two-stage families drop by more than the break threshold at the split.
  const auto& resnet = bundle.groups.back();
  for (const auto& spec : resnet.models) {
    REQUIRE(spec.stages.size() == 2);
    const long split = spec.stages[0].right;
    const double before = spec.stages[0].eval(static_cast<double>(split));
    const double after = spec.stages[1].eval(static_cast<double>(split));
    CHECK((before - after) / before > 0.5);
  }
}

TEST_CASE("bundle json round-trips") {
  const auto catalog = market::default_catalog();
  auto bundle = default_bundle(catalog, 11, 500);
  std::stringstream buf;
  write_bundle_json(buf, bundle);
  auto back = read_bundle_json(buf);
  REQUIRE(back.groups.size() == bundle.groups.size());
  CHECK(back.seed == bundle.seed);
  const auto& a = bundle.groups[2];
  const auto& b = back.groups[2];
  CHECK(a.name == b.name);
  REQUIRE(a.models.size() == b.models.size());
  CHECK(a.models[5].seed == b.models[5].seed);
  CHECK(a.models[5].stages[0].a1 == b.models[5].stages[0].a1);
  CHECK(a.perf.base_spb.at("r4.large") == b.perf.base_spb.at("r4.large"));
  CHECK(a.checkpoint.model_size_mb == b.checkpoint.model_size_mb);
}

TEST_CASE("profile invariants are enforced") {
  PerfProfile profile;
  profile.base_spb["r4.large"] = 10.0;
  profile.jitter_cov = 0.2;  // beyond the documented bound
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(step_duration(profile, "r4.large", rng), DataError);

  CheckpointProfile ckpt;
  ckpt.model_size_mb = 0.0;
  ckpt.speed_mb_per_s["r4.large"] = 60.0;
  CHECK_THROWS_AS(checkpoint_time(ckpt, "r4.large"), DataError);

  auto spec = reciprocal_spec(100, 0.0, 1);
  spec.stages.push_back({150, 200, 0.0, 1.0, 1.0, 0.0});  // gap at 100
  CHECK_THROWS_AS(gen_curve(spec, 50), DataError);
}
