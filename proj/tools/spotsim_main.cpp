// Command-line front end: trace ingestion, predictor training/evaluation,
// curve fitting, simulation, and report emission.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "spotsim/manifest.hpp"
#include "spotsim/market.hpp"
#include "spotsim/orchestrator.hpp"
#include "spotsim/report.hpp"
#include "spotsim/revpred.hpp"
#include "spotsim/workload.hpp"

namespace fs = std::filesystem;
using namespace spotsim;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSim = 3;

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? "."
                                                    : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

market::Catalog load_catalog(const manifest::RunManifest& m) {
  if (m.catalog.empty()) return market::default_catalog();
  auto in = open_in(m.catalog);
  return market::load_catalog_csv(in);
}

// Regularized traces from a directory of per-instance csv files, keyed by
// instance name and restricted to catalog entries.
std::map<std::string, market::PriceTrace> load_traces(
    const fs::path& dir, const market::Catalog& catalog) {
  manifest::require_exists(dir, "trace directory");
  std::map<std::string, market::PriceTrace> traces;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    auto in = open_in(file);
    for (auto& trace : market::ingest_trace(in)) {
      if (!catalog.find(trace.instance)) continue;
      traces[trace.instance] = market::regularize(trace);
    }
  }
  if (traces.empty()) {
    throw DataError("no usable traces under " + dir.string());
  }
  return traces;
}

orchestrator::PredictorSet load_predictors(const fs::path& dir) {
  manifest::require_exists(dir, "predictor directory");
  orchestrator::PredictorSet set;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    auto in = open_in(file);
    auto model = revpred::load_model_json(in);
    auto it = set.find(model.instance());
    // A sequence model wins over a logistic one for the same market.
    if (it == set.end() || (it->second.architecture() == "logistic" &&
                            model.architecture() == "sequence")) {
      set.insert_or_assign(model.instance(), std::move(model));
    }
  }
  if (set.empty()) throw DataError("no predictor models in " + dir.string());
  return set;
}

struct SplitDataset {
  revpred::Dataset train;
  std::vector<revpred::LabeledSample> eval;
};

// Chronological split; training labels must not peek past the boundary.
SplitDataset split_dataset(const revpred::Dataset& full,
                           std::int64_t train_until, std::int64_t eval_from) {
  if (eval_from < train_until) {
    throw DataError("evaluation window overlaps the training window");
  }
  SplitDataset out;
  out.train.trace_id = full.trace_id;
  out.train.stride = full.stride;
  long positives = 0;
  for (const auto& s : full.samples) {
    if (s.t + revpred::kLookahead <= train_until) {
      out.train.samples.push_back(s);
      if (s.label) ++positives;
    } else if (s.t >= eval_from) {
      out.eval.push_back(s);
    }
  }
  if (!out.train.samples.empty()) {
    out.train.balance.phi_plus =
        static_cast<double>(positives) /
        static_cast<double>(out.train.samples.size());
    out.train.balance.phi_minus = 1.0 - out.train.balance.phi_plus;
  }
  return out;
}

void print_eval_row(std::ostream& os, const std::string& instance,
                    const std::string& arch, const revpred::EvalResult& r) {
  os << instance << ',' << arch << ',' << dtos(r.accuracy) << ','
     << dtos(r.f1) << ',' << r.tp << ',' << r.fp << ',' << r.tn << ',' << r.fn
     << '\n';
}

int cmd_ingest(const fs::path& input, const fs::path& out_dir, bool skip_bad,
               const manifest::RunManifest& m) {
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw DataError("no csv files under " + input.string());
    }
  } else {
    manifest::require_exists(input, "input");
    files.push_back(input);
  }

  std::map<std::string, market::PriceTrace> merged;
  for (const auto& file : files) {
    auto in = open_in(file);
    std::vector<market::RowError> errors;
    auto traces = market::ingest_trace(in, skip_bad ? &errors : nullptr);
    for (const auto& err : errors) {
      std::cerr << "warning: " << file.string() << " line " << err.line << ": "
                << err.message << '\n';
    }
    for (auto& trace : traces) {
      auto& dst = merged[trace.instance];
      dst.instance = trace.instance;
      dst.points.insert(dst.points.end(), trace.points.begin(),
                        trace.points.end());
    }
  }
  for (auto& [name, trace] : merged) {
    std::stable_sort(trace.points.begin(), trace.points.end(),
                     [](const market::PricePoint& a,
                        const market::PricePoint& b) {
                       return a.timestamp < b.timestamp;
                     });
    auto regular = market::regularize(trace);
    auto out = open_out(out_dir / (name + ".csv"));
    out << "# version=" << kToolVersion << " seed=" << m.seed
        << " config_hash=" << m.config_hash() << '\n';
    market::write_trace_csv(out, regular);
    std::cout << name << ": " << regular.points.size()
              << " grid points written\n";
  }
  return 0;
}

int cmd_train_revpred(const manifest::RunManifest& m, const fs::path& trace,
                      bool all, const std::string& train_until,
                      const std::string& eval_from,
                      const fs::path& dataset_cache, const fs::path& out_dir) {
  const auto catalog = load_catalog(m);
  std::map<std::string, market::PriceTrace> traces;
  if (all) {
    traces = load_traces(m.trace_dir, catalog);
  } else {
    manifest::require_exists(trace, "trace file");
    auto in = open_in(trace);
    for (auto& t : market::ingest_trace(in)) {
      traces[t.instance] = market::regularize(t);
    }
  }

  std::vector<std::string> archs;
  if (m.train.architecture == "both") {
    archs = {"sequence", "logistic"};
  } else {
    archs = {m.train.architecture};
  }

  std::ostringstream table;
  table << "instance,architecture,accuracy,f1,tp,fp,tn,fn\n";
  bool any_eval = false;

  for (const auto& [name, t] : traces) {
    // One cache file per market; a shared path gets the instance suffixed.
    fs::path cache = dataset_cache;
    if (!cache.empty() && traces.size() > 1) {
      cache += "." + name + ".csv";
    }
    revpred::FeatureTable feature_table;
    if (!cache.empty() && fs::exists(cache)) {
      auto in = open_in(cache);
      feature_table = revpred::read_feature_table_csv(in);
      if (feature_table.trace_id != name ||
          feature_table.stride != m.dataset_stride) {
        throw DataError("dataset cache " + cache.string() +
                        " does not match trace " + name + " at stride " +
                        std::to_string(m.dataset_stride));
      }
    } else {
      feature_table = revpred::build_feature_table(t, m.dataset_stride,
                                                   m.literal_trim_denominator);
      if (!cache.empty()) {
        auto out = open_out(cache);
        revpred::write_feature_table_csv(out, feature_table);
      }
    }
    auto full = revpred::assemble_dataset(feature_table);

    revpred::Dataset train_ds = full;
    std::vector<revpred::LabeledSample> eval_samples;
    if (!train_until.empty()) {
      const std::int64_t until = timeutil::parse_timestamp(train_until);
      const std::int64_t from = eval_from.empty()
                                    ? until
                                    : timeutil::parse_timestamp(eval_from);
      auto split = split_dataset(full, until, from);
      train_ds = std::move(split.train);
      eval_samples = std::move(split.eval);
    }
    if (train_ds.samples.empty()) {
      throw DataError("no training samples for " + name +
                      " before the split boundary");
    }

    for (const auto& arch : archs) {
      revpred::TrainConfig cfg = m.train;
      cfg.architecture = arch;
      auto model = revpred::train(train_ds, cfg, catalog.at(name));
      auto out =
          open_out(out_dir / ("revpred_" + name + "_" + arch + ".json"));
      revpred::save_model_json(out, model, m.config_hash());
      std::cout << "trained " << arch << " model for " << name << " on "
                << train_ds.samples.size() << " samples (phi_plus="
                << dtos(train_ds.balance.phi_plus) << ")\n";
      if (!eval_samples.empty()) {
        any_eval = true;
        print_eval_row(table, name, arch,
                       revpred::evaluate(model, eval_samples));
      }
    }
  }
  if (any_eval) std::cout << table.str();
  return 0;
}

int cmd_eval_revpred(const manifest::RunManifest& m,
                     const std::vector<fs::path>& model_files,
                     const std::string& eval_from, const fs::path& out_file) {
  const auto catalog = load_catalog(m);
  auto traces = load_traces(m.trace_dir, catalog);

  std::ostringstream table;
  table << "instance,architecture,accuracy,f1,tp,fp,tn,fn\n";
  for (const auto& file : model_files) {
    auto in = open_in(file);
    auto model = revpred::load_model_json(in);
    auto it = traces.find(model.instance());
    if (it == traces.end()) {
      throw DataError("no trace for model instance " + model.instance());
    }
    auto full = revpred::build_dataset(it->second, m.dataset_stride,
                                       m.literal_trim_denominator);
    std::vector<revpred::LabeledSample> eval_samples;
    const std::int64_t from =
        eval_from.empty() ? it->second.start_time()
                          : timeutil::parse_timestamp(eval_from);
    for (const auto& s : full.samples) {
      if (s.t >= from) eval_samples.push_back(s);
    }
    if (eval_samples.empty()) {
      throw DataError("no evaluation samples for " + model.instance());
    }
    print_eval_row(table, model.instance(), model.architecture(),
                   revpred::evaluate(model, eval_samples));
  }
  std::cout << table.str();
  if (!out_file.empty()) {
    auto out = open_out(out_file);
    out << "# version=" << kToolVersion << " seed=" << m.seed
        << " config_hash=" << m.config_hash() << '\n';
    out << table.str();
  }
  return 0;
}

int cmd_fit_curve(const manifest::RunManifest& m, const fs::path& input,
                  long max_steps, const fs::path& out_file) {
  manifest::require_exists(input, "metric trace");
  auto in = open_in(input);
  auto trace = workload::replay_trace(in);

  earlycurve::FitConfig cfg = m.sim.fit;
  cfg.theta = m.sim.theta;
  auto staged = earlycurve::fit_curve(trace, cfg);
  auto single = earlycurve::fit_single_stage(trace, cfg);
  const double staged_rss = earlycurve::fit_residual(staged, trace);
  const double single_rss = earlycurve::fit_residual(single, trace);
  const double predicted = earlycurve::predict_final(trace, max_steps, cfg);

  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : staged.stages) {
    stages.push_back({{"left", st.left},
                      {"right", st.right},
                      {"a0", st.a0},
                      {"a1", st.a1},
                      {"a2", st.a2},
                      {"a3", st.a3}});
  }
  nlohmann::json doc{{"meta",
                      {{"version", kToolVersion},
                       {"seed", m.seed},
                       {"config_hash", m.config_hash()}}},
                     {"horizon", staged.horizon},
                     {"stages", stages},
                     {"max_trial_steps", max_steps},
                     {"predicted_final", predicted},
                     {"staged_residual", staged_rss},
                     {"single_stage_residual", single_rss}};
  if (!out_file.empty()) {
    auto out = open_out(out_file);
    out << doc.dump(2) << '\n';
  }
  std::cout << "stages: " << staged.stages.size()
            << "  predicted final at " << max_steps << ": " << dtos(predicted)
            << "\nstaged residual: " << dtos(staged_rss)
            << "  single-stage residual: " << dtos(single_rss) << '\n';
  return 0;
}

struct BaselinePick {
  std::string cheapest;
  std::string fastest;
};

BaselinePick pick_baselines(const market::Catalog& catalog,
                            const std::map<std::string, market::PriceTrace>& traces,
                            const workload::Workload& group) {
  BaselinePick pick;
  double best_price = 0.0, best_spb = 0.0;
  for (const auto& [name, trace] : traces) {
    const auto& inst = catalog.at(name);
    const double spb = group.perf.base_spb.count(name)
                           ? group.perf.base_spb.at(name)
                           : 1e18;
    if (pick.cheapest.empty() || inst.on_demand_price < best_price) {
      pick.cheapest = name;
      best_price = inst.on_demand_price;
    }
    if (pick.fastest.empty() || spb < best_spb) {
      pick.fastest = name;
      best_spb = spb;
    }
  }
  return pick;
}

int cmd_simulate(const manifest::RunManifest& m, bool theta_sweep,
                 bool event_log, const std::string& group_filter,
                 std::string cheapest_override, std::string fastest_override) {
  const auto catalog = load_catalog(m);
  auto traces = load_traces(m.trace_dir, catalog);
  manifest::require_exists(m.bundle, "workload bundle");
  auto bundle_in = open_in(m.bundle);
  auto bundle = workload::read_bundle_json(bundle_in);
  auto predictors = load_predictors(m.predictor_dir);
  if (m.output_dir.empty()) throw DataError("output directory not set");
  fs::create_directories(m.output_dir);

  const report::FileMeta meta{m.seed, m.config_hash()};

  for (const auto& group : bundle.groups) {
    if (!group_filter.empty() && group.name != group_filter) continue;

    orchestrator::SimConfig config = m.sim;
    config.seed = m.seed;
    auto policy =
        orchestrator::run_simulation(config, catalog, traces, group, predictors);

    auto pick = pick_baselines(catalog, traces, group);
    if (!cheapest_override.empty()) pick.cheapest = cheapest_override;
    if (!fastest_override.empty()) pick.fastest = fastest_override;
    auto cheap = orchestrator::simulate_baseline(config, catalog, traces, group,
                                                 pick.cheapest);
    auto fast = orchestrator::simulate_baseline(config, catalog, traces, group,
                                                pick.fastest);

    const std::string prefix = (m.output_dir / group.name).string();
    {
      auto out = open_out(prefix + "_policy.json");
      report::write_report_json(out, policy, meta, event_log);
      auto ledger = open_out(prefix + "_policy.ledger.csv");
      report::write_ledger_csv(ledger, policy, meta);
    }
    {
      auto out = open_out(prefix + "_baseline_cheapest.json");
      report::write_report_json(out, cheap, meta, event_log);
      auto ledger = open_out(prefix + "_baseline_cheapest.ledger.csv");
      report::write_ledger_csv(ledger, cheap, meta);
    }
    {
      auto out = open_out(prefix + "_baseline_fastest.json");
      report::write_report_json(out, fast, meta, event_log);
      auto ledger = open_out(prefix + "_baseline_fastest.ledger.csv");
      report::write_ledger_csv(ledger, fast, meta);
    }

    char policy_name[64];
    std::snprintf(policy_name, sizeof(policy_name), "policy_theta%.1f",
                  config.theta);
    std::vector<std::pair<std::string, orchestrator::Report>> runs{
        {policy_name, policy},
        {"baseline_cheapest_" + pick.cheapest, cheap},
        {"baseline_fastest_" + pick.fastest, fast}};
    auto rows = report::normalized_pcr(runs, policy_name);
    auto pcr_out = open_out(prefix + "_pcr.csv");
    report::write_pcr_csv(pcr_out, rows, meta);
    std::cout << group.name << ": policy cost " << dtos(policy.total_cost)
              << " jct " << dtos(policy.jct_seconds) << "  cheapest cost "
              << dtos(cheap.total_cost) << "  fastest cost "
              << dtos(fast.total_cost) << '\n';

    if (theta_sweep) {
      std::vector<std::pair<double, orchestrator::Report>> sweep;
      double reference_alpha = 0.0;
      for (int i = 1; i <= 10; ++i) {
        orchestrator::SimConfig sweep_config = config;
        sweep_config.theta = static_cast<double>(i) / 10.0;
        auto rep = orchestrator::run_simulation(sweep_config, catalog, traces,
                                                group, predictors);
        if (i == 7) reference_alpha = rep.jct_cost_product();
        sweep.emplace_back(sweep_config.theta, std::move(rep));
      }
      auto rows10 = report::sweep_rows(sweep, reference_alpha);
      auto out = open_out(prefix + "_sweep.csv");
      report::write_sweep_csv(out, rows10, meta);
    }
  }
  return 0;
}

int cmd_report(const std::vector<fs::path>& inputs,
               const std::string& reference, const fs::path& out_file,
               const manifest::RunManifest& m) {
  std::vector<std::pair<std::string, orchestrator::Report>> runs;
  for (const auto& file : inputs) {
    auto in = open_in(file);
    runs.emplace_back(file.stem().string(), report::read_report_json(in));
  }
  if (runs.empty()) throw DataError("no report files given");
  const std::string ref = reference.empty() ? runs.front().first : reference;
  auto rows = report::normalized_pcr(runs, ref);
  std::cout << "run,cost_usd,jct_seconds,pcr\n";
  for (const auto& row : rows) {
    std::cout << row.run << ',' << dtos(row.cost) << ',' << dtos(row.jct)
              << ',' << dtos(row.pcr) << '\n';
  }
  if (!out_file.empty()) {
    auto out = open_out(out_file);
    report::write_pcr_csv(out, rows, {m.seed, m.config_hash()});
  }
  return 0;
}

int cmd_gen_demo(const fs::path& out_dir, std::uint64_t seed) {
  fs::create_directories(out_dir / "traces");
  const auto catalog = market::default_catalog();
  {
    auto out = open_out(out_dir / "catalog.csv");
    market::write_catalog_csv(out, catalog);
  }

  // Spot-style event records: a row per price change, irregular intervals.
  // The everyday movement is a fixed-size flicker between two levels, which
  // plausible ceilings survive; rare spikes far above the band are what
  // triggers revocations.
  {
    auto out = open_out(out_dir / "traces" / "raw_prices.csv");
    out << "timestamp,instance_type,price\n";
    const std::int64_t start = 1493164800;  // a Wednesday, 00:00 UTC
    const std::int64_t span = 96 * 3600;
    for (const auto& inst : catalog.instances()) {
      std::mt19937_64 rng(mix_seed(seed, "demo/" + inst.name));
      std::uniform_int_distribution<std::int64_t> gap(50, 80);
      std::uniform_int_distribution<std::int64_t> spike_hold(60, 180);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double base = 0.25 * inst.on_demand_price;
      const double wiggle = 0.01 * base;
      double price = base - wiggle;
      std::int64_t t = start;
      out << t << ',' << inst.name << ',' << dtos(price) << '\n';
      while (t < start + span) {
        t += gap(rng);
        if (unit(rng) < 0.012) {
          const double spike = base + 0.25 + 0.5 * unit(rng);
          out << t << ',' << inst.name << ',' << dtos(spike) << '\n';
          t += spike_hold(rng);
          price = base - wiggle;
          out << t << ',' << inst.name << ',' << dtos(price) << '\n';
          continue;
        }
        price = price > base ? base - wiggle : base + wiggle;
        out << t << ',' << inst.name << ',' << dtos(price) << '\n';
      }
    }
  }

  auto bundle = workload::default_bundle(catalog, seed, 1000);
  {
    auto out = open_out(out_dir / "bundle.json");
    workload::write_bundle_json(out, bundle);
  }
  {
    auto out = open_out(out_dir / "config.json");
    nlohmann::json doc{
        {"seed", seed},
        {"sim",
         {{"metric", "validation_loss"},
          {"max_trial_steps", 1000},
          {"theta", 0.7},
          {"mcnt", 3},
          {"c0", 3600.0},
          {"poll_interval", 10},
          {"notice_lead", 120},
          {"rotation_limit", 3600}}},
        {"train",
         {{"architecture", "logistic"},
          {"epochs", 30},
          {"learning_rate", 0.05},
          {"batch_size", 32},
          {"stride", 60}}},
        {"paths",
         {{"trace_dir", "grid"},
          {"bundle", "bundle.json"},
          {"predictor_dir", "predictors"},
          {"output_dir", "out"},
          {"catalog", "catalog.csv"}}}};
    out << doc.dump(2) << '\n';
  }
  std::cout << "demo written to " << out_dir.string() << "\nnext steps:\n"
            << "  spotsim ingest --input " << (out_dir / "traces").string()
            << " --output-dir " << (out_dir / "grid").string() << '\n'
            << "  spotsim train-revpred -c "
            << (out_dir / "config.json").string() << " --all --out "
            << (out_dir / "predictors").string() << '\n'
            << "  spotsim simulate -c " << (out_dir / "config.json").string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trace-driven spot-market simulator for cost-aware "
               "hyper-parameter tuning"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("-c,--config", config_path,
                 "config file (JSON); defaults to $SPOTSIM_CONFIG");

  std::uint64_t seed_override = 0;
  bool seed_set = false;
  app.add_option("--seed", seed_override, "override the manifest seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto load_manifest = [&]() {
    manifest::RunManifest m = config_path.empty()
                                  ? manifest::default_manifest()
                                  : manifest::load_config(config_path);
    if (seed_set) {
      m.seed = seed_override;
      m.sim.seed = seed_override;
      m.train.seed = seed_override;
    }
    return m;
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "regularize raw price records");
  std::string ingest_input, ingest_out;
  bool skip_bad = false;
  ingest->add_option("--input", ingest_input, "csv file or directory")
      ->required();
  ingest->add_option("--output-dir", ingest_out, "directory for grid traces")
      ->required();
  ingest->add_flag("--skip-bad", skip_bad, "warn on bad rows instead of failing");
  ingest->callback([&] {
    cmd_ingest(ingest_input, ingest_out, skip_bad, load_manifest());
  });

  // train-revpred
  auto* trainc = app.add_subcommand("train-revpred",
                                    "train revocation predictors");
  std::string train_trace, train_until, eval_from, train_arch;
  std::string train_cache, train_out = "predictors";
  bool train_all = false;
  int train_epochs = -1;
  double train_lr = -1.0;
  trainc->add_option("--trace", train_trace, "one regularized trace csv");
  trainc->add_flag("--all", train_all, "train on every trace in trace_dir");
  trainc->add_option("--train-until", train_until,
                     "chronological boundary (epoch or ISO-8601)");
  trainc->add_option("--eval-from", eval_from,
                     "evaluation window start; must not precede --train-until");
  trainc->add_option("--architecture", train_arch,
                     "sequence | logistic | both");
  trainc->add_option("--dataset-cache", train_cache,
                     "columnar feature cache to reuse or create");
  trainc->add_option("--out", train_out, "output directory for model files");
  trainc->add_option("--epochs", train_epochs, "training epochs");
  trainc->add_option("--learning-rate", train_lr, "optimizer step size");
  trainc->callback([&] {
    auto m = load_manifest();
    if (!train_arch.empty()) m.train.architecture = train_arch;
    if (train_epochs > 0) m.train.epochs = train_epochs;
    if (train_lr > 0) m.train.learning_rate = train_lr;
    if (!train_all && train_trace.empty()) {
      throw CLI::ValidationError("train-revpred",
                                 "either --trace or --all is required");
    }
    cmd_train_revpred(m, train_trace, train_all, train_until, eval_from,
                      train_cache, train_out);
  });

  // eval-revpred
  auto* evalc = app.add_subcommand("eval-revpred",
                                   "evaluate predictor checkpoints");
  std::vector<std::string> eval_models;
  std::string eval_out, eval_from2;
  evalc->add_option("--model", eval_models, "model json files")->required();
  evalc->add_option("--eval-from", eval_from2, "evaluation window start");
  evalc->add_option("--out", eval_out, "metrics table csv");
  evalc->callback([&] {
    std::vector<fs::path> paths(eval_models.begin(), eval_models.end());
    cmd_eval_revpred(load_manifest(), paths, eval_from2, eval_out);
  });

  // simulate
  auto* simc = app.add_subcommand("simulate",
                                  "run the policy and both baselines");
  bool sweep = false, event_log = false;
  std::string group_filter, cheapest_override, fastest_override;
  double theta_override = -1.0;
  simc->add_flag("--theta-sweep", sweep,
                 "run theta from 0.1 to 1.0 and emit a sweep table");
  simc->add_flag("--event-log", event_log, "embed the event log in reports");
  simc->add_option("--group", group_filter, "run only this workload group");
  simc->add_option("--theta", theta_override, "override the shutdown rate");
  simc->add_option("--baseline-cheapest", cheapest_override,
                   "instance for the cheapest baseline");
  simc->add_option("--baseline-fastest", fastest_override,
                   "instance for the fastest baseline");
  simc->callback([&] {
    auto m = load_manifest();
    if (theta_override > 0) m.sim.theta = theta_override;
    cmd_simulate(m, sweep, event_log, group_filter, cheapest_override,
                 fastest_override);
  });

  // fit-curve
  auto* fitc = app.add_subcommand("fit-curve", "fit a recorded metric trace");
  std::string fit_input, fit_out;
  long fit_max_steps = 0;
  fitc->add_option("--input", fit_input, "step,metric csv")->required();
  fitc->add_option("--max-steps", fit_max_steps, "prediction step")->required();
  fitc->add_option("--out", fit_out, "fitted-curve json");
  double fit_theta = -1.0;
  fitc->add_option("--theta", fit_theta, "override the coverage requirement");
  fitc->callback([&] {
    auto m = load_manifest();
    if (fit_theta > 0) m.sim.theta = fit_theta;
    cmd_fit_curve(m, fit_input, fit_max_steps, fit_out);
  });

  // report
  auto* repc = app.add_subcommand("report", "normalize PCR across reports");
  std::vector<std::string> report_inputs;
  std::string report_ref, report_out;
  repc->add_option("--inputs", report_inputs, "report json files")->required();
  repc->add_option("--reference", report_ref,
                   "run name whose PCR becomes one (default: first)");
  repc->add_option("--out", report_out, "normalized table csv");
  repc->callback([&] {
    std::vector<fs::path> paths(report_inputs.begin(), report_inputs.end());
    cmd_report(paths, report_ref, report_out, load_manifest());
  });

  // gen-demo
  auto* demo = app.add_subcommand("gen-demo",
                                  "write a runnable demo data set");
  std::string demo_out = "demo";
  std::uint64_t demo_seed = 1;
  demo->add_option("--out", demo_out, "demo directory");
  demo->add_option("--demo-seed", demo_seed, "generator seed");
  demo->callback([&] {
    cmd_gen_demo(demo_out, seed_set ? seed_override : demo_seed);
  });

  // Global options may appear after the subcommand name.
  for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const SimError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return kExitSim;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const TrainError& e) {
    std::cerr << "training error: " << e.what() << '\n';
    return kExitData;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
