#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spotsim/earlycurve.hpp"
#include "spotsim/market.hpp"
#include "spotsim/revpred.hpp"
#include "spotsim/workload.hpp"

namespace spotsim::orchestrator {

enum class JobState { waiting, running, finished, continued, done };

std::string to_string(JobState state);

struct SimConfig {
  std::string metric = "validation_loss";
  long max_trial_steps = 1000;
  double theta = 0.7;  // fraction of max_trial_steps before early shutdown
  int mcnt = 3;        // models continued after early shutdown
  double c0 = 3600.0;  // seconds-per-step initialization constant
  std::int64_t poll_interval = 10;
  std::int64_t notice_lead = 120;
  std::int64_t rotation_limit = 3600;
  std::uint64_t seed = 1;
  bool literal_matrix_init = false;  // C0 * cpus instead of C0 / cpus
  earlycurve::Direction direction = earlycurve::Direction::minimize;
  earlycurve::FitConfig fit;
  std::optional<std::int64_t> start_time;  // derived from traces when absent
};

// Online seconds-per-step estimate per (instance, hyper-parameter) pair.
// Cells start at the initialization value; the first observation replaces it
// and later ones blend in with an exponential moving average.
class PerfMatrix {
 public:
  PerfMatrix() = default;
  PerfMatrix(const market::Catalog& catalog,
             const std::vector<std::string>& pool,
             const std::vector<std::string>& hp_ids, double c0,
             bool literal_init);

  double at(const std::string& instance, const std::string& hp) const;
  long samples(const std::string& instance, const std::string& hp) const;
  void update(const std::string& instance, const std::string& hp,
              double observed_spb);

 private:
  struct Cell {
    double value = 0.0;
    long samples = 0;
  };
  std::map<std::pair<std::string, std::string>, Cell> cells_;
};

PerfMatrix init_perf_matrix(const market::Catalog& catalog,
                            const std::vector<std::string>& pool,
                            const std::vector<std::string>& hp_ids, double c0,
                            bool literal_init = false);

// Expected money per training step in the next hour; ranking-only value.
double step_cost(double m_spb, double revocation_p, double avg_price);

using PredictorSet = std::map<std::string, revpred::PredictorModel>;

struct ProvisionChoice {
  std::string instance;
  double max_price = 0.0;
  double revocation_p = 0.0;
  double cost = 0.0;
  double avg_price = 0.0;
};

// Draws a ceiling price per pool instance, queries the calibrated revocation
// probability, and returns the lowest step-cost instance. Instances without a
// predictor are skipped; ties break on lower hourly average then name.
ProvisionChoice get_best_inst(
    std::int64_t t, const std::string& hp, const PerfMatrix& matrix,
    const std::vector<std::string>& pool,
    const std::map<std::string, market::PriceTrace>& traces,
    const PredictorSet& predictors, std::mt19937_64& rng);

struct Action {
  enum class Kind {
    notice_checkpoint,
    finish,
    rotate,
    data_loss,
    deploy,
  };
  Kind kind;
  std::string hp;
  std::string instance;
  std::int64_t time = 0;
  std::string detail;
};

std::string to_string(Action::Kind kind);

struct LedgerRow {
  std::string hp;
  std::string instance;
  std::int64_t start = 0;
  std::int64_t end = 0;
  market::EndReason reason = market::EndReason::finished;
  double charge = 0.0;
  bool refunded = false;
  long steps = 0;  // steps retained from this acquisition
};

struct Report {
  std::string policy;  // "policy" or "baseline"
  std::string baseline_instance;
  std::string workload;
  double theta = 0.7;
  std::uint64_t seed = 0;
  std::int64_t sim_start = 0;
  std::int64_t sim_end = 0;
  double total_cost = 0.0;
  double jct_seconds = 0.0;
  double pcr = 0.0;
  double pcr_alpha = 0.0;
  double free_steps_fraction = 0.0;
  long total_steps = 0;
  long free_steps = 0;
  std::vector<LedgerRow> ledger;
  std::map<std::string, double> predictions;
  std::vector<std::string> top_models;
  bool truth_known = false;
  bool top1_correct = false;
  bool top3_correct = false;
  std::vector<std::string> events;

  // PCR is alpha / (JCT * cost); the reference run's own alpha makes its PCR
  // exactly one.
  void apply_pcr_alpha(double alpha);
  double jct_cost_product() const { return jct_seconds * total_cost; }
};

// Deterministic discrete-event simulation of the tuning workflow over spot
// price traces. Drives one workload group; single-threaded, and identical
// (config, traces, seed) inputs always reproduce the identical report.
// Independent engines may run in parallel threads with isolated state.
class Engine {
 public:
  struct Options {
    std::optional<std::string> pinned_instance;  // baseline: fixed instance
    bool never_revoke = false;                   // baseline: ceiling high enough
    bool disable_rotation = false;
  };

  Engine(SimConfig config, const market::Catalog& catalog,
         std::map<std::string, market::PriceTrace> traces,
         const workload::Workload& group, const PredictorSet* predictors,
         Options options);
  Engine(SimConfig config, const market::Catalog& catalog,
         std::map<std::string, market::PriceTrace> traces,
         const workload::Workload& group, const PredictorSet* predictors);
  ~Engine();

  // Processes one poll instant: revocation notices first, then completions,
  // then rotations, then redeployments of waiting jobs.
  std::vector<Action> handle_tick(std::int64_t t);

  Report run();

  std::int64_t sim_start() const { return sim_start_; }
  const PerfMatrix& matrix() const { return matrix_; }
  JobState job_state(const std::string& hp) const;
  long job_steps(const std::string& hp) const;

 private:
  struct Job;

  void advance_steps(Job& job, double cutoff);
  void close_acquisition(Job& job, std::int64_t end, market::EndReason reason);
  bool attempt_checkpoint(Job& job, std::int64_t at,
                          std::optional<std::int64_t> deadline,
                          std::vector<Action>& actions);
  void deploy(Job& job, std::int64_t t, std::vector<Action>& actions);
  earlycurve::MetricTrace revealed(const Job& job) const;
  earlycurve::MetricTrace revealed_tail(const Job& job, int count) const;
  double checkpoint_seconds(const std::string& instance) const;
  void guard_horizon(std::int64_t t) const;

  SimConfig config_;
  const market::Catalog& catalog_;
  std::map<std::string, market::PriceTrace> traces_;
  const workload::Workload& group_;
  const PredictorSet* predictors_;
  Options options_;
  std::vector<std::string> pool_;
  std::vector<std::unique_ptr<Job>> jobs_;
  PerfMatrix matrix_;
  std::mt19937_64 provision_rng_;
  long theta_steps_ = 0;
  std::int64_t sim_start_ = 0;
  bool continuation_phase_ = false;
  std::int64_t last_completion_end_ = 0;
  std::vector<LedgerRow> ledger_;
  std::vector<std::string> events_;
};

Report run_simulation(const SimConfig& config, const market::Catalog& catalog,
                      const std::map<std::string, market::PriceTrace>& traces,
                      const workload::Workload& group,
                      const PredictorSet& predictors);

// All settings run on clones of one never-revoked instance type to full
// training length: the single-spot comparison point.
Report simulate_baseline(const SimConfig& config,
                         const market::Catalog& catalog,
                         const std::map<std::string, market::PriceTrace>& traces,
                         const workload::Workload& group,
                         const std::string& instance_name);

}  // namespace spotsim::orchestrator
