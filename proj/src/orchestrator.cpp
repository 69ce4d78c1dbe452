#include "spotsim/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace spotsim::orchestrator {

std::string to_string(JobState state) {
  switch (state) {
    case JobState::waiting: return "waiting";
    case JobState::running: return "running";
    case JobState::finished: return "finished";
    case JobState::continued: return "continued";
    case JobState::done: return "done";
  }
  return "unknown";
}

std::string to_string(Action::Kind kind) {
  switch (kind) {
    case Action::Kind::notice_checkpoint: return "notice_checkpoint";
    case Action::Kind::finish: return "finish";
    case Action::Kind::rotate: return "rotate";
    case Action::Kind::data_loss: return "data_loss";
    case Action::Kind::deploy: return "deploy";
  }
  return "unknown";
}

PerfMatrix::PerfMatrix(const market::Catalog& catalog,
                       const std::vector<std::string>& pool,
                       const std::vector<std::string>& hp_ids, double c0,
                       bool literal_init) {
  if (!(c0 > 0.0)) throw DataError("C0 must be positive");
  for (const auto& name : pool) {
    const auto& inst = catalog.at(name);
    const double init = literal_init
                            ? c0 * static_cast<double>(inst.cpus)
                            : c0 / static_cast<double>(inst.cpus);
    for (const auto& hp : hp_ids) {
      cells_[{name, hp}] = Cell{init, 0};
    }
  }
}

double PerfMatrix::at(const std::string& instance, const std::string& hp) const {
  auto it = cells_.find({instance, hp});
  if (it == cells_.end()) {
    throw DataError("no matrix cell for (" + instance + ", " + hp + ")");
  }
  return it->second.value;
}

long PerfMatrix::samples(const std::string& instance,
                         const std::string& hp) const {
  auto it = cells_.find({instance, hp});
  if (it == cells_.end()) {
    throw DataError("no matrix cell for (" + instance + ", " + hp + ")");
  }
  return it->second.samples;
}

void PerfMatrix::update(const std::string& instance, const std::string& hp,
                        double observed_spb) {
  if (!(observed_spb > 0.0)) {
    throw DataError("observed seconds-per-step must be positive");
  }
  auto it = cells_.find({instance, hp});
  if (it == cells_.end()) {
    throw DataError("no matrix cell for (" + instance + ", " + hp + ")");
  }
  Cell& cell = it->second;
  if (cell.samples == 0) {
    cell.value = observed_spb;  // first observation replaces the prior
  } else {
    cell.value = 0.5 * observed_spb + 0.5 * cell.value;
  }
  ++cell.samples;
}

PerfMatrix init_perf_matrix(const market::Catalog& catalog,
                            const std::vector<std::string>& pool,
                            const std::vector<std::string>& hp_ids, double c0,
                            bool literal_init) {
  return PerfMatrix(catalog, pool, hp_ids, c0, literal_init);
}

double step_cost(double m_spb, double revocation_p, double avg_price) {
  if (revocation_p < 0.0 || revocation_p > 1.0) {
    throw SimError("revocation probability outside [0, 1]");
  }
  if (!(avg_price > 0.0)) throw SimError("average price must be positive");
  return m_spb * (1.0 - revocation_p) * avg_price;
}

ProvisionChoice get_best_inst(
    std::int64_t t, const std::string& hp, const PerfMatrix& matrix,
    const std::vector<std::string>& pool,
    const std::map<std::string, market::PriceTrace>& traces,
    const PredictorSet& predictors, std::mt19937_64& rng) {
  if (pool.empty()) throw SimError("instance pool is empty");
  ProvisionChoice best;
  bool have = false;
  for (const auto& name : pool) {
    auto trace_it = traces.find(name);
    if (trace_it == traces.end()) continue;
    const market::PriceTrace& trace = trace_it->second;
    const double current = market::price_at(trace, t);
    const double max_price = revpred::inference_max_price(current, rng);
    auto model_it = predictors.find(name);
    if (model_it == predictors.end()) continue;

    std::vector<revpred::FeatureRecord> history;
    history.reserve(revpred::kHistoryMinutes);
    for (int m = revpred::kHistoryMinutes; m >= 1; --m) {
      history.push_back(
          revpred::engineer_features(trace, t - m * market::kGridInterval));
    }
    const revpred::FeatureRecord present = revpred::engineer_features(trace, t);
    const double p = model_it->second.predict(history, present, max_price);
    const double pbar = market::avg_price(trace, t, market::kHour);
    const double cost = step_cost(matrix.at(name, hp), p, pbar);
    if (!have || cost < best.cost ||
        (cost == best.cost && (pbar < best.avg_price ||
                               (pbar == best.avg_price && name < best.instance)))) {
      best = ProvisionChoice{name, max_price, p, cost, pbar};
      have = true;
    }
  }
  if (!have) {
    throw SimError("no instance with both a trace and a predictor at t=" +
                   std::to_string(t));
  }
  return best;
}

void Report::apply_pcr_alpha(double alpha) {
  pcr_alpha = alpha;
  const double denom = jct_cost_product();
  pcr = denom > 0.0 ? alpha / denom : 0.0;
}

Engine::Engine(SimConfig config, const market::Catalog& catalog,
               std::map<std::string, market::PriceTrace> traces,
               const workload::Workload& group, const PredictorSet* predictors)
    : Engine(std::move(config), catalog, std::move(traces), group, predictors,
             Options()) {}

Engine::~Engine() = default;

struct Engine::Job {
  std::string hp_id;
  const workload::SyntheticModelSpec* spec = nullptr;
  earlycurve::MetricTrace curve;  // pre-generated full metric curve
  JobState state = JobState::waiting;
  long steps_done = 0;
  long checkpoint_steps = 0;
  bool has_checkpoint = false;
  bool plateau_hit = false;
  std::mt19937_64 step_rng;

  struct Active {
    std::string instance;
    std::int64_t start = 0;
    double max_price = 0.0;
    std::optional<std::int64_t> revocation;
    double next_completion = 0.0;  // absolute time the in-flight step ends
    double cur_step_seconds = 0.0;
    long steps_at_deploy = 0;
  };
  std::optional<Active> active;
};

Engine::Engine(SimConfig config, const market::Catalog& catalog,
               std::map<std::string, market::PriceTrace> traces,
               const workload::Workload& group, const PredictorSet* predictors,
               Options options)
    : config_(std::move(config)),
      catalog_(catalog),
      traces_(std::move(traces)),
      group_(group),
      predictors_(predictors),
      options_(std::move(options)),
      provision_rng_(mix_seed(config_.seed, "provision")) {
  if (!(config_.theta > 0.0) || config_.theta > 1.0) {
    throw DataError("theta must be in (0, 1]");
  }
  config_.fit.theta = config_.theta;  // coverage rule follows the shutdown rate
  if (config_.mcnt < 1) throw DataError("mcnt must be at least 1");
  if (config_.poll_interval <= 0 || config_.notice_lead <= 0 ||
      config_.rotation_limit <= 0) {
    throw DataError("durations must be positive");
  }
  if (group_.models.empty()) throw DataError("workload has no models");

  for (const auto& [name, trace] : traces_) {
    catalog_.at(name);  // must exist
    for (std::size_t i = 1; i < trace.points.size(); ++i) {
      if (trace.points[i].timestamp - trace.points[i - 1].timestamp !=
          market::kGridInterval) {
        throw DataError("trace " + name + " is not on the regular grid");
      }
    }
    pool_.push_back(name);
  }
  std::sort(pool_.begin(), pool_.end());
  if (options_.pinned_instance) {
    catalog_.at(*options_.pinned_instance);
    if (!traces_.count(*options_.pinned_instance)) {
      throw DataError("no trace for pinned instance " +
                      *options_.pinned_instance);
    }
  }
  if (pool_.empty()) throw DataError("no usable price traces");

  std::vector<std::string> hp_ids;
  for (const auto& spec : group_.models) hp_ids.push_back(spec.hp_id);
  std::sort(hp_ids.begin(), hp_ids.end());
  matrix_ = PerfMatrix(catalog_, pool_, hp_ids, config_.c0,
                       config_.literal_matrix_init);

  theta_steps_ = static_cast<long>(std::ceil(
      config_.theta * static_cast<double>(config_.max_trial_steps) - 1e-9));

  for (const auto& id : hp_ids) {
    auto job = std::make_unique<Job>();
    job->hp_id = id;
    for (const auto& spec : group_.models) {
      if (spec.hp_id == id) job->spec = &spec;
    }
    if (job->spec->horizon() < config_.max_trial_steps) {
      throw DataError("model " + id + " horizon shorter than max_trial_steps");
    }
    job->curve = workload::gen_curve(*job->spec, config_.max_trial_steps);
    job->step_rng.seed(mix_seed(config_.seed, "steps/" + id));
    jobs_.push_back(std::move(job));
  }

  if (config_.start_time) {
    sim_start_ = *config_.start_time;
  } else {
    std::int64_t earliest = 0;
    for (const auto& name : pool_) {
      earliest = std::max(earliest, traces_.at(name).start_time() + 7200);
    }
    sim_start_ = ((earliest + 59) / 60) * 60;
  }
}

double Engine::checkpoint_seconds(const std::string& instance) const {
  return workload::checkpoint_time(group_.checkpoint, instance).seconds;
}

void Engine::guard_horizon(std::int64_t t) const {
  for (const auto& name : pool_) {
    if (t > traces_.at(name).end_time()) {
      throw SimError("simulation horizon exhausted at t=" + std::to_string(t) +
                     ": trace " + name + " ends at " +
                     std::to_string(traces_.at(name).end_time()));
    }
  }
}

earlycurve::MetricTrace Engine::revealed(const Job& job) const {
  earlycurve::MetricTrace prefix;
  for (const auto& p : job.curve.points) {
    if (p.step > job.steps_done) break;
    prefix.points.push_back(p);
  }
  return prefix;
}

earlycurve::MetricTrace Engine::revealed_tail(const Job& job, int count) const {
  auto end = std::upper_bound(
      job.curve.points.begin(), job.curve.points.end(), job.steps_done,
      [](long v, const earlycurve::MetricPoint& p) { return v < p.step; });
  auto begin = end - job.curve.points.begin() > count ? end - count
                                                      : job.curve.points.begin();
  earlycurve::MetricTrace tail;
  tail.points.assign(begin, end);
  return tail;
}

void Engine::advance_steps(Job& job, double cutoff) {
  if (!job.active) return;
  auto& a = *job.active;
  while (job.steps_done < config_.max_trial_steps &&
         a.next_completion <= cutoff) {
    ++job.steps_done;
    matrix_.update(a.instance, job.hp_id, a.cur_step_seconds);
    a.cur_step_seconds =
        workload::step_duration(group_.perf, a.instance, job.step_rng);
    a.next_completion += a.cur_step_seconds;
  }
}

void Engine::close_acquisition(Job& job, std::int64_t end,
                               market::EndReason reason) {
  auto& a = *job.active;
  market::Acquisition acq{a.instance, a.start, a.max_price, end, reason};
  const auto [charge, refunded] = market::bill(traces_.at(a.instance), acq);
  LedgerRow row;
  row.hp = job.hp_id;
  row.instance = a.instance;
  row.start = a.start;
  row.end = end;
  row.reason = reason;
  row.charge = charge;
  row.refunded = refunded;
  row.steps = job.steps_done - a.steps_at_deploy;
  ledger_.push_back(row);
  job.active.reset();
}

bool Engine::attempt_checkpoint(Job& job, std::int64_t at,
                                std::optional<std::int64_t> deadline,
                                std::vector<Action>& actions) {
  const double seconds = checkpoint_seconds(job.active->instance);
  const std::int64_t done_at = at + static_cast<std::int64_t>(std::ceil(seconds));
  if (deadline && done_at > *deadline) {
    const long lost = job.steps_done - job.checkpoint_steps;
    job.steps_done = job.checkpoint_steps;
    actions.push_back({Action::Kind::data_loss, job.hp_id,
                       job.active->instance, at,
                       "lost " + std::to_string(lost) +
                           " steps: checkpoint needs " + dtos(seconds) +
                           " s but revocation is at " +
                           std::to_string(*deadline)});
    return false;
  }
  job.checkpoint_steps = job.steps_done;
  job.has_checkpoint = true;
  return true;
}

void Engine::deploy(Job& job, std::int64_t t, std::vector<Action>& actions) {
  ProvisionChoice choice;
  if (options_.pinned_instance) {
    choice.instance = *options_.pinned_instance;
    choice.max_price = 1e9;  // high enough to never trigger a revocation
  } else {
    if (!predictors_) throw SimError("no predictors configured");
    choice = get_best_inst(t, job.hp_id, matrix_, pool_, traces_, *predictors_,
                           provision_rng_);
  }

  Job::Active a;
  a.instance = choice.instance;
  a.start = t;
  a.max_price = choice.max_price;
  if (!options_.never_revoke) {
    a.revocation =
        market::revocation_time(traces_.at(choice.instance), t, choice.max_price);
  }
  const double restore =
      job.has_checkpoint ? checkpoint_seconds(choice.instance) : 0.0;
  a.steps_at_deploy = job.steps_done;
  a.cur_step_seconds =
      workload::step_duration(group_.perf, choice.instance, job.step_rng);
  a.next_completion = static_cast<double>(t) + restore + a.cur_step_seconds;
  job.active = a;
  job.state = continuation_phase_ ? JobState::continued : JobState::running;
  actions.push_back({Action::Kind::deploy, job.hp_id, choice.instance, t, ""});
}

std::vector<Action> Engine::handle_tick(std::int64_t t) {
  guard_horizon(t);
  std::vector<Action> actions;

  for (auto& jptr : jobs_) {
    Job& job = *jptr;
    if (!job.active) continue;
    auto& a = *job.active;
    const std::optional<std::int64_t> t_rev = a.revocation;

    // Steps only count while the machine is still up.
    const double cutoff =
        t_rev ? std::min(static_cast<double>(t), static_cast<double>(*t_rev))
              : static_cast<double>(t);
    advance_steps(job, cutoff);

    // Event priority per job per tick: revocation notice beats completion
    // beats rotation.
    if (t_rev && t >= *t_rev - config_.notice_lead) {
      attempt_checkpoint(job, std::min(t, *t_rev), *t_rev, actions);
      actions.push_back({Action::Kind::notice_checkpoint, job.hp_id,
                         a.instance, t,
                         "revocation at " + std::to_string(*t_rev)});
      close_acquisition(job, *t_rev, market::EndReason::revoked);
      job.state =
          continuation_phase_ ? JobState::continued : JobState::waiting;
      continue;
    }

    const long target =
        continuation_phase_ ? config_.max_trial_steps : theta_steps_;
    // With theta = 1 early shutdown is off entirely, so convergence before
    // the target does not end a job.
    bool plateau = false;
    if (!continuation_phase_ && config_.theta < 1.0 &&
        job.steps_done < target) {
      plateau = earlycurve::detect_plateau(
          revealed_tail(job, config_.fit.steadiness_window + 1), config_.fit);
    }
    if (job.steps_done >= target || plateau) {
      const std::int64_t ckpt_end =
          t + static_cast<std::int64_t>(std::ceil(checkpoint_seconds(a.instance)));
      if (t_rev && *t_rev < ckpt_end) {
        // The provider wins the race: the final checkpoint does not land.
        attempt_checkpoint(job, t, *t_rev, actions);
        close_acquisition(job, *t_rev, market::EndReason::revoked);
        job.state =
            continuation_phase_ ? JobState::continued : JobState::waiting;
        continue;
      }
      attempt_checkpoint(job, t, std::nullopt, actions);
      if (plateau) job.plateau_hit = true;
      actions.push_back({Action::Kind::finish, job.hp_id, a.instance, t,
                         plateau ? "plateau" : "steps"});
      close_acquisition(job, ckpt_end, market::EndReason::finished);
      job.state = continuation_phase_ ? JobState::done : JobState::finished;
      last_completion_end_ = std::max(last_completion_end_, ckpt_end);
      continue;
    }

    if (!options_.disable_rotation &&
        t - a.start > config_.rotation_limit) {
      const std::int64_t ckpt_end =
          t + static_cast<std::int64_t>(std::ceil(checkpoint_seconds(a.instance)));
      if (t_rev && *t_rev < ckpt_end) {
        attempt_checkpoint(job, t, *t_rev, actions);
        close_acquisition(job, *t_rev, market::EndReason::revoked);
      } else {
        attempt_checkpoint(job, t, std::nullopt, actions);
        actions.push_back({Action::Kind::rotate, job.hp_id, a.instance, t, ""});
        close_acquisition(job, ckpt_end, market::EndReason::self_shutdown);
      }
      job.state =
          continuation_phase_ ? JobState::continued : JobState::waiting;
      continue;
    }
  }

  // Every waiting job is redeployed in stable identifier order.
  for (auto& jptr : jobs_) {
    Job& job = *jptr;
    if (job.active) continue;
    const bool wants =
        continuation_phase_
            ? job.state == JobState::continued &&
                  job.steps_done < config_.max_trial_steps
            : job.state == JobState::waiting;
    if (wants) deploy(job, t, actions);
  }
  return actions;
}

JobState Engine::job_state(const std::string& hp) const {
  for (const auto& j : jobs_) {
    if (j->hp_id == hp) return j->state;
  }
  throw DataError("unknown job " + hp);
}

long Engine::job_steps(const std::string& hp) const {
  for (const auto& j : jobs_) {
    if (j->hp_id == hp) return j->steps_done;
  }
  throw DataError("unknown job " + hp);
}

Report Engine::run() {
  std::int64_t t = sim_start_;
  auto log_actions = [&](const std::vector<Action>& actions) {
    for (const auto& act : actions) {
      std::ostringstream os;
      os << "t=" << act.time << " " << to_string(act.kind) << " hp=" << act.hp
         << " instance=" << act.instance;
      if (!act.detail.empty()) os << " (" << act.detail << ")";
      events_.push_back(os.str());
    }
  };

  auto main_pending = [&] {
    for (const auto& j : jobs_) {
      if (j->state != JobState::finished) return true;
    }
    return false;
  };
  while (main_pending()) {
    log_actions(handle_tick(t));
    t += config_.poll_interval;
  }
  // Selection happens here; the continuation below is post-selection work.
  const std::int64_t selection_end = last_completion_end_;

  // Final-metric prediction and top-mcnt selection.
  std::map<std::string, double> predictions;
  for (const auto& j : jobs_) {
    const auto prefix = revealed(*j);
    double pred;
    if (j->steps_done >= theta_steps_) {
      pred = earlycurve::predict_final(prefix, config_.max_trial_steps,
                                       config_.fit);
    } else {
      // Converged before the shutdown threshold; fit whatever is observed.
      pred = earlycurve::predict_metric(
          earlycurve::fit_curve(prefix, config_.fit), config_.max_trial_steps);
    }
    predictions[j->hp_id] = pred;
  }
  const auto top = earlycurve::rank_models(
      predictions, static_cast<std::size_t>(config_.mcnt), config_.direction);

  continuation_phase_ = true;
  for (auto& j : jobs_) {
    if (std::find(top.begin(), top.end(), j->hp_id) == top.end()) continue;
    j->state = j->steps_done >= config_.max_trial_steps ? JobState::done
                                                        : JobState::continued;
  }
  auto continuation_pending = [&] {
    for (const auto& j : jobs_) {
      if (j->state == JobState::continued) return true;
    }
    return false;
  };
  while (continuation_pending()) {
    log_actions(handle_tick(t));
    t += config_.poll_interval;
  }

  Report report;
  report.policy = options_.pinned_instance ? "baseline" : "policy";
  if (options_.pinned_instance) report.baseline_instance = *options_.pinned_instance;
  report.workload = group_.name;
  report.theta = config_.theta;
  report.seed = config_.seed;
  report.sim_start = sim_start_;
  report.sim_end = last_completion_end_;
  report.jct_seconds = static_cast<double>(selection_end - sim_start_);
  report.ledger = ledger_;
  for (const auto& row : ledger_) {
    report.total_cost += row.charge;
    report.total_steps += row.steps;
    if (row.refunded) report.free_steps += row.steps;
  }
  report.free_steps_fraction =
      report.total_steps > 0
          ? static_cast<double>(report.free_steps) /
                static_cast<double>(report.total_steps)
          : 0.0;
  report.predictions = predictions;
  report.top_models = top;
  report.events = events_;

  // Selection accuracy against the generator truth.
  report.truth_known = true;
  std::map<std::string, double> truth;
  for (const auto& j : jobs_) {
    truth[j->hp_id] = workload::true_metric(*j->spec, config_.max_trial_steps);
  }
  const auto true_best =
      earlycurve::rank_models(truth, 1, config_.direction).front();
  report.top1_correct = !top.empty() && top.front() == true_best;
  const auto top3 = earlycurve::rank_models(
      predictions, std::min<std::size_t>(3, predictions.size()),
      config_.direction);
  report.top3_correct =
      std::find(top3.begin(), top3.end(), true_best) != top3.end();

  report.apply_pcr_alpha(report.jct_cost_product());
  return report;
}

Report run_simulation(const SimConfig& config, const market::Catalog& catalog,
                      const std::map<std::string, market::PriceTrace>& traces,
                      const workload::Workload& group,
                      const PredictorSet& predictors) {
  Engine engine(config, catalog, traces, group, &predictors);
  return engine.run();
}

Report simulate_baseline(const SimConfig& config,
                         const market::Catalog& catalog,
                         const std::map<std::string, market::PriceTrace>& traces,
                         const workload::Workload& group,
                         const std::string& instance_name) {
  catalog.at(instance_name);  // unknown instance -> error
  SimConfig base = config;
  base.theta = 1.0;
  Engine::Options options;
  options.pinned_instance = instance_name;
  options.never_revoke = true;
  options.disable_rotation = true;
  Engine engine(base, catalog, traces, group, nullptr, options);
  return engine.run();
}

}  // namespace spotsim::orchestrator
