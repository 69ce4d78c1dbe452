// Acceptance suite: one check per documented criterion, each printing a
// [PASS] or [FAIL] line. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "spotsim/earlycurve.hpp"
#include "spotsim/manifest.hpp"
#include "spotsim/market.hpp"
#include "spotsim/nn.hpp"
#include "spotsim/orchestrator.hpp"
#include "spotsim/report.hpp"
#include "spotsim/revpred.hpp"
#include "spotsim/workload.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace spotsim;
using testsupport::grid_trace;
using testsupport::regime_trace;

namespace {

int g_failures = 0;

class Criterion {
 public:
  explicit Criterion(std::string name) : name_(std::move(name)) {
    start_ = std::chrono::steady_clock::now();
  }

  void expect(bool ok, const std::string& detail) {
    if (!ok && why_.empty()) why_ = detail;
    ok_ = ok_ && ok;
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start_)
            .count();
    if (ok_) {
      std::printf("[PASS] %s (%.2fs)\n", name_.c_str(), secs);
    } else {
      ++g_failures;
      std::printf("[FAIL] %s (%.2fs): %s\n", name_.c_str(), secs,
                  why_.c_str());
    }
    std::fflush(stdout);
  }

 private:
  std::string name_;
  bool ok_ = true;
  std::string why_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) { return dtos(v); }

// ---------------------------------------------------------------------------
// 1. Billing matches a per-second brute-force oracle.
// ---------------------------------------------------------------------------
void criterion_billing_oracle() {
  Criterion c("1. billing oracle equivalence on 1000 random acquisitions");
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> price(0.05, 2.0);
  std::uniform_int_distribution<std::int64_t> start(0, 7200);
  std::uniform_int_distribution<std::int64_t> dur(1, 4 * 3600);
  std::uniform_int_distribution<int> reason(0, 2);

  std::vector<market::PriceTrace> traces;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> prices;
    for (int m = 0; m < 800; ++m) prices.push_back(price(rng));
    traces.push_back(grid_trace("t" + std::to_string(i), 0, prices));
  }

  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto& trace = traces[static_cast<std::size_t>(trial % 5)];
    market::Acquisition acq;
    acq.instance = trace.instance;
    acq.start_time = start(rng);
    acq.end_time = acq.start_time + dur(rng);
    acq.max_price = 10.0;
    acq.end_reason = static_cast<market::EndReason>(reason(rng));
    const auto [charge, refunded] = market::bill(trace, acq);

    double oracle = 0.0;
    const bool oracle_refund =
        acq.end_reason == market::EndReason::revoked &&
        acq.end_time - acq.start_time < 3600;
    if (!oracle_refund) {
      for (std::int64_t s = acq.start_time; s < acq.end_time; ++s) {
        oracle += market::price_at(trace, s) / 3600.0;
      }
    }
    worst = std::max(worst, std::abs(charge - oracle));
    if (oracle_refund) {
      c.expect(refunded && charge == 0.0,
               "revoked under an hour must charge exactly zero");
    }
  }
  c.expect(worst < 1e-9, "worst deviation " + fmt(worst));
}

// ---------------------------------------------------------------------------
// 2. Ceiling-price rule: worked example plus a lower-bound property.
// ---------------------------------------------------------------------------
void criterion_ceiling_rule() {
  Criterion c("2. ceiling-price rule exactness and lower bound");
  // Worked window: sorted deltas 0,0,.01,.01,.02,.02,.03,.03,.05,.10 around
  // a current price of 1.00.
  {
    const std::int64_t t = 10000;
    market::PriceTrace trace;
    trace.instance = "x";
    trace.points.push_back({t - 7200, 1.00});
    const std::vector<double> path{1.00, 1.00, 1.01, 1.00, 1.02,
                                   1.00, 1.03, 1.00, 1.05, 0.95};
    for (std::size_t i = 0; i < path.size(); ++i) {
      trace.points.push_back(
          {t - 3540 + static_cast<std::int64_t>(i) * 300, path[i]});
    }
    trace.points.push_back({t, 1.00});
    const double expected =
        1.00 + (0.01 + 0.01 + 0.02 + 0.02 + 0.03 + 0.03) / 6.0;
    const double got = revpred::training_max_price(trace, t);
    c.expect(got == expected,
             "worked example: got " + fmt(got) + " want " + fmt(expected));
    c.expect(std::abs(got - 1.02) < 1e-12, "worked example far from 1.02");
  }

  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> jump(-0.01, 0.01);
  std::uniform_int_distribution<int> pick(120, 600);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> prices;
    double p = 0.5;
    for (int m = 0; m < 700; ++m) {
      if (m % (2 + trial % 5) == 0) p = std::max(0.05, p + jump(rng));
      prices.push_back(p);
    }
    auto trace = grid_trace("x", 0, prices);
    for (int q = 0; q < 100; ++q) {
      const std::int64_t t = static_cast<std::int64_t>(pick(rng)) * 60;
      const double ceiling = revpred::training_max_price(trace, t);
      if (!(ceiling >= market::price_at(trace, t))) {
        c.expect(false, "ceiling below current price at t=" +
                            std::to_string(t));
        return;
      }
    }
  }
  c.expect(true, "");
}

// ---------------------------------------------------------------------------
// 3. Odds calibration: closed form, identity, monotonicity.
// ---------------------------------------------------------------------------
void criterion_calibration() {
  Criterion c("3. odds calibration closed form and monotonicity");
  const revpred::ClassBalance skewed{0.1, 0.9};
  c.expect(std::abs(revpred::calibrate(0.9, skewed) - 81.0 / 82.0) < 1e-12,
           "0.9 with phi_plus 0.1 must map to 81/82");

  const revpred::ClassBalance balanced{0.5, 0.5};
  for (int i = 0; i <= 1000; ++i) {
    const double p = static_cast<double>(i) / 1000.0;
    if (revpred::calibrate(p, balanced) != p) {
      c.expect(false, "balanced calibration is not the identity at " + fmt(p));
      return;
    }
  }
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v =
        revpred::calibrate(static_cast<double>(i) / 1000.0, skewed);
    if (v < prev) {
      c.expect(false, "calibration not monotone at grid point " +
                          std::to_string(i));
      return;
    }
    prev = v;
  }
  c.expect(true, "");
}

// ---------------------------------------------------------------------------
// 4. Both predictor architectures learn a feature-determined corpus.
// ---------------------------------------------------------------------------
void criterion_predictor_learning() {
  Criterion c("4. predictor learning reaches F1 >= 0.9 on a held-out split");
  auto trace = regime_trace("r4.large", 0, 16);
  auto full = revpred::build_dataset(trace);

  const std::size_t cut = full.samples.size() * 7 / 10;
  revpred::Dataset train_ds{full.trace_id, full.stride, {}, {}};
  std::vector<revpred::LabeledSample> eval_samples;
  long pos = 0;
  for (std::size_t i = 0; i < full.samples.size(); ++i) {
    if (i < cut) {
      train_ds.samples.push_back(full.samples[i]);
      if (full.samples[i].label) ++pos;
    } else {
      eval_samples.push_back(full.samples[i]);
    }
  }
  train_ds.balance.phi_plus =
      static_cast<double>(pos) / static_cast<double>(train_ds.samples.size());
  train_ds.balance.phi_minus = 1.0 - train_ds.balance.phi_plus;

  const market::InstanceType inst{"r4.large", 2, 15.25, 0.133};

  revpred::TrainConfig logistic_cfg;
  logistic_cfg.architecture = "logistic";
  logistic_cfg.epochs = 40;
  logistic_cfg.learning_rate = 0.05;
  logistic_cfg.seed = 7;
  const auto logistic = revpred::train(train_ds, logistic_cfg, inst);
  const auto logistic_eval = revpred::evaluate(logistic, eval_samples);

  revpred::TrainConfig seq_cfg;
  seq_cfg.architecture = "sequence";
  seq_cfg.epochs = 6;
  seq_cfg.learning_rate = 0.01;
  seq_cfg.batch_size = 32;
  seq_cfg.hidden = 16;
  seq_cfg.seed = 7;
  const auto sequence = revpred::train(train_ds, seq_cfg, inst);
  const auto seq_eval = revpred::evaluate(sequence, eval_samples);

  c.expect(logistic_eval.f1 >= 0.9,
           "logistic F1 " + fmt(logistic_eval.f1) + " below 0.9");
  c.expect(seq_eval.f1 >= 0.9,
           "sequence F1 " + fmt(seq_eval.f1) + " below 0.9");
  c.expect(seq_eval.f1 >= logistic_eval.f1,
           "sequence F1 " + fmt(seq_eval.f1) + " below logistic " +
               fmt(logistic_eval.f1));
}

// ---------------------------------------------------------------------------
// 5. Trainer gradients against central finite differences.
// ---------------------------------------------------------------------------
void criterion_gradients() {
  Criterion c("5. trainer gradients match finite differences");
  std::mt19937_64 rng(505);
  std::normal_distribution<double> dist(0.0, 1.0);
  auto make_samples = [&](int n, int t, int f, int p) {
    std::vector<nn::EncodedSample> out;
    for (int i = 0; i < n; ++i) {
      nn::EncodedSample s;
      s.history.resize(t, f);
      for (int r = 0; r < t; ++r) {
        for (int col = 0; col < f; ++col) s.history(r, col) = dist(rng);
      }
      s.present.resize(p);
      for (int col = 0; col < p; ++col) s.present[col] = dist(rng);
      s.label = i % 2 == 0 ? 1.0 : 0.0;
      out.push_back(std::move(s));
    }
    return out;
  };

  {
    nn::LogisticNet net(nn::LogisticConfig{2, 5});  // exactly ten parameters
    net.init_params(1);
    auto samples = make_samples(10, 6, 2, 5);
    std::vector<const nn::EncodedSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    const double err =
        nn::max_gradient_error(net, batch, nn::LossWeights{0.7, 0.3}, 1e-5);
    c.expect(err < 1e-4, "logistic gradient error " + fmt(err));
  }
  {
    nn::SequenceConfig cfg;
    cfg.input_dim = 2;
    cfg.present_dim = 3;
    cfg.hidden = 3;
    cfg.lstm_layers = 3;
    cfg.dense_dim = 4;
    nn::SequenceNet net(cfg);
    net.init_params(2);
    auto samples = make_samples(5, 8, 2, 3);
    std::vector<const nn::EncodedSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    const double err =
        nn::max_gradient_error(net, batch, nn::LossWeights{0.9, 0.1}, 1e-5);
    c.expect(err < 1e-4, "sequence gradient error " + fmt(err));
  }
}

// ---------------------------------------------------------------------------
// 6. Identifiability: exact on clean curves, a few percent under noise.
// ---------------------------------------------------------------------------
void criterion_identifiability() {
  Criterion c("6. curve fits extrapolate cleanly and degrade gracefully");
  earlycurve::FitConfig cfg;
  cfg.theta = 0.7;

  {
    workload::SyntheticModelSpec spec;
    spec.hp_id = "clean";
    spec.stages.push_back({0, 1000, 0.0, 0.004, 0.8, 0.0});
    spec.noise_sigma = 0.0;
    spec.seed = 1;
    auto trace = workload::gen_curve(spec, 999);
    trace.points.resize(700);  // first 70% of 1000 points
    const double predicted = earlycurve::predict_final(trace, 999, cfg);
    const double truth = workload::true_metric(spec, 999);
    const double rel = std::abs(predicted - truth) / truth;
    c.expect(rel < 1e-6, "clean relative error " + fmt(rel));
  }

  double total_rel = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    workload::SyntheticModelSpec spec;
    spec.hp_id = "noisy";
    spec.stages.push_back({0, 1000, 0.0, 0.004, 0.8, 0.2});
    spec.noise_sigma = 0.01;
    spec.seed = static_cast<std::uint64_t>(seed) + 1000;
    auto trace = workload::gen_curve(spec, 999);
    trace.points.resize(700);
    const double predicted = earlycurve::predict_final(trace, 999, cfg);
    const double truth = workload::true_metric(spec, 999);
    total_rel += std::abs(predicted - truth) / truth;
  }
  const double mean_rel = total_rel / 100.0;
  c.expect(mean_rel < 0.05,
           "mean relative error under 1% noise " + fmt(mean_rel));
}

// ---------------------------------------------------------------------------
// 7. Selection keeps the true best inside the top three, 100 seeds.
// ---------------------------------------------------------------------------
void criterion_top3() {
  Criterion c("7. top-3 selection finds the true best in 100/100 runs");
  earlycurve::FitConfig cfg;
  cfg.theta = 0.7;
  int hits = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::map<std::string, double> predictions;
    std::string true_best;
    double best_final = 0.0;
    for (int i = 0; i < 16; ++i) {
      workload::SyntheticModelSpec spec;
      char id[16];
      std::snprintf(id, sizeof(id), "hp%02d", i);
      spec.hp_id = id;
      // Final losses form a geometric ladder with ten-percent spacing.
      const double final_target = 0.3 * std::pow(1.1, i);
      const double tail = 1.0 / (0.004 * 1000.0 + 0.8);
      spec.stages.push_back({0, 1000, 0.0, 0.004, 0.8, final_target - tail});
      spec.noise_sigma = 0.01;
      spec.seed = mix_seed(static_cast<std::uint64_t>(seed), spec.hp_id);
      auto trace = workload::gen_curve(spec, 999);
      trace.points.resize(700);
      predictions[spec.hp_id] =
          earlycurve::predict_final(trace, 999, cfg);
      const double truth = workload::true_metric(spec, 999);
      if (true_best.empty() || truth < best_final) {
        true_best = spec.hp_id;
        best_final = truth;
      }
    }
    auto top3 =
        earlycurve::rank_models(predictions, 3, earlycurve::Direction::minimize);
    if (std::find(top3.begin(), top3.end(), true_best) != top3.end()) ++hits;
  }
  c.expect(hits == 100, "true best inside top-3 in only " +
                            std::to_string(hits) + "/100 runs");
}

// ---------------------------------------------------------------------------
// 8. Staged fit beats the forced single stage on drop-shaped curves.
// ---------------------------------------------------------------------------
void criterion_staged_vs_single() {
  Criterion c("8. staged fit beats the single-stage fit in 100/100 cases");
  earlycurve::FitConfig cfg;
  std::mt19937_64 rng(808);
  std::normal_distribution<double> noise(0.0, 0.002);
  int wins = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const long split = 300 + (trial % 7) * 25;
    earlycurve::MetricTrace trace;
    for (long k = 0; k < 700; ++k) {
      double truth;
      if (k < split) {
        truth = 1.0 / (0.002 * k + 1.0) + 0.5;
      } else {
        truth = 1.0 / (0.004 * k + 2.0) + 0.1;
      }
      trace.points.push_back({k, truth * (1.0 + noise(rng))});
    }
    const double staged =
        earlycurve::fit_residual(earlycurve::fit_curve(trace, cfg), trace);
    const double single = earlycurve::fit_residual(
        earlycurve::fit_single_stage(trace, cfg), trace);
    if (staged < single) ++wins;
  }
  c.expect(wins == 100,
           "staged fit won only " + std::to_string(wins) + "/100");
}

// ---------------------------------------------------------------------------
// 9. Refund-window revocations make training nearly free.
// ---------------------------------------------------------------------------
void criterion_refund_economics() {
  Criterion c("9. refund-window revocations cut cost below ten percent");
  const auto catalog = market::default_catalog();

  workload::Workload group;
  group.name = "refund";
  for (int i = 0; i < 4; ++i) {
    workload::SyntheticModelSpec spec;
    char id[16];
    std::snprintf(id, sizeof(id), "hp%02d", i);
    spec.hp_id = id;
    spec.stages.push_back({0, 1500, 0.0, 0.001, 1.0 + 0.1 * i, 0.2});
    spec.noise_sigma = 0.05;
    spec.seed = 900 + i;
    group.models.push_back(std::move(spec));
  }
  group.perf.base_spb["r4.large"] = 30.0;
  group.checkpoint.speed_mb_per_s["r4.large"] = 62.83;
  group.perf.jitter_cov = 0.0;
  group.checkpoint.model_size_mb = 62.83;  // one-second checkpoints

  // A one-minute spike every 55 minutes with escalating peaks: each peak
  // exceeds any ceiling declared earlier (ceilings sit at most 0.2 above the
  // posted price), so even an acquisition made during a spike is revoked by
  // the next one inside its refund window.
  std::vector<double> prices;
  for (int m = 0; m < 26 * 60; ++m) {
    if (m > 0 && m % 55 == 0) {
      prices.push_back(0.4 + 0.21 * (m / 55));
    } else {
      prices.push_back(0.10);
    }
  }
  std::map<std::string, market::PriceTrace> traces{
      {"r4.large", grid_trace("r4.large", 0, prices)}};

  orchestrator::SimConfig config;
  config.max_trial_steps = 1500;
  config.theta = 1.0;  // same completed steps as the baseline
  config.mcnt = 1;
  config.seed = 909;

  revpred::NormStats norm;
  norm.mean = nn::Vector::Zero(7);
  norm.stdev = nn::Vector::Ones(7);
  norm.on_demand_price = 1.0;
  orchestrator::PredictorSet predictors;
  {
    auto net = std::make_shared<nn::LogisticNet>(nn::LogisticConfig{6, 7});
    net->params().setZero();
    predictors.emplace(
        "r4.large",
        revpred::PredictorModel("logistic", net, norm,
                                revpred::ClassBalance{0.5, 0.5},
                                revpred::TrainConfig{}, "r4.large"));
  }

  auto policy =
      orchestrator::run_simulation(config, catalog, traces, group, predictors);
  auto baseline = orchestrator::simulate_baseline(config, catalog, traces,
                                                  group, "r4.large");

  c.expect(policy.total_steps == baseline.total_steps,
           "completed steps differ: " + std::to_string(policy.total_steps) +
               " vs " + std::to_string(baseline.total_steps));
  c.expect(policy.total_cost < 0.1 * baseline.total_cost,
           "policy cost " + fmt(policy.total_cost) + " not below 10% of " +
               fmt(baseline.total_cost));
  c.expect(policy.free_steps_fraction > 0.9,
           "free fraction " + fmt(policy.free_steps_fraction));
}

// ---------------------------------------------------------------------------
// 10. Policy and baseline coincide when nothing distinguishes them.
// ---------------------------------------------------------------------------
void criterion_baseline_equivalence() {
  Criterion c("10. policy equals baseline under theta=1 on a calm market");
  const auto catalog = market::default_catalog();

  workload::Workload group;
  group.name = "calm";
  for (int i = 0; i < 3; ++i) {
    workload::SyntheticModelSpec spec;
    char id[16];
    std::snprintf(id, sizeof(id), "hp%02d", i);
    spec.hp_id = id;
    spec.stages.push_back({0, 80, 0.0, 0.01, 1.0 + 0.2 * i, 0.1});
    spec.noise_sigma = 0.0;
    spec.seed = 800 + i;
    group.models.push_back(std::move(spec));
  }
  group.perf.base_spb["r4.large"] = 30.0;
  group.perf.jitter_cov = 0.0;
  group.checkpoint.model_size_mb = 62.83;
  group.checkpoint.speed_mb_per_s["r4.large"] = 62.83;

  std::map<std::string, market::PriceTrace> traces{
      {"r4.large", grid_trace("r4.large", 0, std::vector<double>(400, 0.0266))}};

  orchestrator::SimConfig config;
  config.max_trial_steps = 80;
  config.theta = 1.0;
  config.mcnt = 1;
  config.seed = 810;

  auto net = std::make_shared<nn::LogisticNet>(nn::LogisticConfig{6, 7});
  net->params().setZero();
  revpred::NormStats norm;
  norm.mean = nn::Vector::Zero(7);
  norm.stdev = nn::Vector::Ones(7);
  norm.on_demand_price = 1.0;
  orchestrator::PredictorSet predictors;
  predictors.emplace(
      "r4.large",
      revpred::PredictorModel("logistic", net, norm,
                              revpred::ClassBalance{0.5, 0.5},
                              revpred::TrainConfig{}, "r4.large"));

  auto policy =
      orchestrator::run_simulation(config, catalog, traces, group, predictors);
  auto baseline =
      orchestrator::simulate_baseline(config, catalog, traces, group,
                                      "r4.large");

  c.expect(policy.total_cost == baseline.total_cost, "costs differ");
  c.expect(policy.jct_seconds == baseline.jct_seconds, "JCTs differ");
  c.expect(policy.ledger.size() == baseline.ledger.size(),
           "ledger sizes differ");
  for (std::size_t i = 0;
       i < std::min(policy.ledger.size(), baseline.ledger.size()); ++i) {
    const auto& a = policy.ledger[i];
    const auto& b = baseline.ledger[i];
    if (a.hp != b.hp || a.instance != b.instance || a.start != b.start ||
        a.end != b.end || a.reason != b.reason || a.charge != b.charge ||
        a.refunded != b.refunded || a.steps != b.steps) {
      c.expect(false, "ledger row " + std::to_string(i) + " differs");
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// 11. Theta sweep: JCT monotone, cost reversals flagged.
// ---------------------------------------------------------------------------
void criterion_theta_sweep() {
  Criterion c("11. theta sweep is monotone with flagged cost reversals");
  const auto catalog = market::default_catalog();
  auto bundle = workload::default_bundle(catalog, 4242, 1000);
  const auto& group = bundle.groups.front();

  // Calm-ish markets: fixed-size flicker plus one spike every six hours.
  std::map<std::string, market::PriceTrace> traces;
  orchestrator::PredictorSet predictors;
  int offset = 60;
  for (const auto& name : {"r4.large", "r4.xlarge", "m4.4xlarge"}) {
    const auto& inst = catalog.at(name);
    const double base = 0.25 * inst.on_demand_price;
    std::vector<double> prices;
    for (int m = 0; m < 30 * 60; ++m) {
      if (m > 0 && (m - offset) % 360 == 0) {
        prices.push_back(base + 0.4);
      } else {
        prices.push_back(m % 2 == 0 ? base : base * 1.01);
      }
    }
    offset += 97;
    traces[name] = grid_trace(name, 0, prices);

    auto net = std::make_shared<nn::LogisticNet>(nn::LogisticConfig{6, 7});
    net->params().setZero();
    revpred::NormStats norm;
    norm.mean = nn::Vector::Zero(7);
    norm.stdev = nn::Vector::Ones(7);
    norm.on_demand_price = inst.on_demand_price;
    predictors.emplace(
        name, revpred::PredictorModel("logistic", net, norm,
                                      revpred::ClassBalance{0.5, 0.5},
                                      revpred::TrainConfig{}, name));
  }

  orchestrator::SimConfig config;
  config.max_trial_steps = 1000;
  config.mcnt = 3;
  config.seed = 4242;

  std::vector<std::pair<double, orchestrator::Report>> runs;
  double reference_alpha = 0.0;
  for (int i = 1; i <= 10; ++i) {
    config.theta = static_cast<double>(i) / 10.0;
    auto rep =
        orchestrator::run_simulation(config, catalog, traces, group, predictors);
    if (i == 7) reference_alpha = rep.jct_cost_product();
    runs.emplace_back(config.theta, std::move(rep));
  }
  auto rows = report::sweep_rows(runs, reference_alpha);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].jct + static_cast<double>(config.poll_interval) <
        rows[i - 1].jct) {
      c.expect(false, "JCT drops at theta " + fmt(rows[i].theta) + " (" +
                          fmt(rows[i - 1].jct) + " -> " + fmt(rows[i].jct) +
                          ")");
      return;
    }
    const bool decreased = rows[i].cost < rows[i - 1].cost;
    if (decreased && !rows[i].cost_reversal) {
      c.expect(false, "unflagged cost reversal at theta " + fmt(rows[i].theta));
      return;
    }
    if (!decreased && rows[i].cost_reversal) {
      c.expect(false, "spurious reversal flag at theta " + fmt(rows[i].theta));
      return;
    }
  }
  c.expect(std::abs(rows[6].pcr - 1.0) < 1e-12,
           "reference theta=0.7 PCR is " + fmt(rows[6].pcr));
}

// ---------------------------------------------------------------------------
// 12. End-to-end determinism through the command-line tool.
// ---------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_cli_determinism(const std::string& cli) {
  Criterion c("12. identical manifests reproduce byte-identical reports");
  if (cli.empty()) {
    c.expect(false, "no CLI binary path given");
    return;
  }
  const fs::path dir =
      fs::temp_directory_path() /
      ("spotsim_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const std::string demo = (dir / "demo").string();
  bool ok = run("gen-demo --out " + demo + " --demo-seed 5");
  ok = ok && run("ingest --input " + demo + "/traces --output-dir " + demo +
                 "/grid");
  ok = ok && run("train-revpred -c " + demo + "/config.json --all --out " +
                 demo + "/predictors");
  ok = ok && run("simulate -c " + demo + "/config.json --group lor");
  c.expect(ok, "pipeline commands failed");
  if (!ok) return;

  std::map<std::string, std::string> first;
  for (const auto& entry : fs::directory_iterator(demo + "/out")) {
    first[entry.path().filename().string()] = slurp(entry.path());
  }
  fs::remove_all(demo + "/out");
  c.expect(run("simulate -c " + demo + "/config.json --group lor"),
           "second simulate failed");
  for (const auto& entry : fs::directory_iterator(demo + "/out")) {
    const auto name = entry.path().filename().string();
    if (!first.count(name) || first[name] != slurp(entry.path())) {
      c.expect(false, "file " + name + " differs between runs");
      fs::remove_all(dir);
      return;
    }
  }
  c.expect(first.size() == 7, "unexpected report count");
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// 13. Checkpoint feasibility boundary.
// ---------------------------------------------------------------------------
void criterion_checkpoint_boundary() {
  Criterion c("13. checkpoint feasibility matches the two-minute bound");
  const double bound_mb = 62.83 * 120.0;  // 7539.6 MB, about 7.36 GB
  workload::CheckpointProfile just_under;
  just_under.model_size_mb = bound_mb * 0.99;
  just_under.speed_mb_per_s["t2.micro"] = 62.83;
  workload::CheckpointProfile just_over;
  just_over.model_size_mb = bound_mb * 1.01;
  just_over.speed_mb_per_s["t2.micro"] = 62.83;

  const auto under = workload::checkpoint_time(just_under, "t2.micro");
  const auto over = workload::checkpoint_time(just_over, "t2.micro");
  c.expect(under.feasible, "one percent under the bound must be feasible");
  c.expect(!over.feasible, "one percent over the bound must be infeasible");
  c.expect(std::abs(bound_mb / 1024.0 - 7.36) / 7.36 < 0.01,
           "bound is not 7.36 GB within one percent");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  criterion_billing_oracle();
  criterion_ceiling_rule();
  criterion_calibration();
  criterion_predictor_learning();
  criterion_gradients();
  criterion_identifiability();
  criterion_top3();
  criterion_staged_vs_single();
  criterion_refund_economics();
  criterion_baseline_equivalence();
  criterion_theta_sweep();
  criterion_cli_determinism(cli);
  criterion_checkpoint_boundary();

  if (g_failures == 0) {
    std::printf("all 13 criteria passed\n");
  } else {
    std::printf("%d criteria FAILED\n", g_failures);
  }
  return g_failures;
}
