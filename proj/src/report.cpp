#include "spotsim/report.hpp"

#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "spotsim/util.hpp"

namespace spotsim::report {

namespace {

nlohmann::json meta_json(const FileMeta& meta) {
  return {{"version", spotsim::kToolVersion},
          {"seed", meta.seed},
          {"config_hash", meta.config_hash}};
}

void write_meta_comment(std::ostream& out, const FileMeta& meta) {
  out << "# version=" << spotsim::kToolVersion << " seed=" << meta.seed
      << " config_hash=" << meta.config_hash << '\n';
}

}  // namespace

void write_report_json(std::ostream& out, const orchestrator::Report& report,
                       const FileMeta& meta, bool include_events) {
  nlohmann::json ledger = nlohmann::json::array();
  for (const auto& row : report.ledger) {
    ledger.push_back({{"job", row.hp},
                      {"instance", row.instance},
                      {"start", row.start},
                      {"end", row.end},
                      {"reason", market::to_string(row.reason)},
                      {"charge", row.charge},
                      {"refunded", row.refunded},
                      {"steps", row.steps}});
  }
  nlohmann::json doc{{"meta", meta_json(meta)},
                     {"policy", report.policy},
                     {"baseline_instance", report.baseline_instance},
                     {"workload", report.workload},
                     {"theta", report.theta},
                     {"run_seed", report.seed},
                     {"sim_start", report.sim_start},
                     {"sim_end", report.sim_end},
                     {"total_cost_usd", report.total_cost},
                     {"jct_seconds", report.jct_seconds},
                     {"pcr", report.pcr},
                     {"pcr_alpha", report.pcr_alpha},
                     {"free_steps_fraction", report.free_steps_fraction},
                     {"total_steps", report.total_steps},
                     {"free_steps", report.free_steps},
                     {"predictions", report.predictions},
                     {"top_models", report.top_models},
                     {"truth_known", report.truth_known},
                     {"top1_correct", report.top1_correct},
                     {"top3_correct", report.top3_correct},
                     {"ledger", ledger}};
  if (include_events) doc["events"] = report.events;
  out << doc.dump(2) << '\n';
}

orchestrator::Report read_report_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad report file: ") + e.what());
  }
  orchestrator::Report r;
  try {
    r.policy = doc.at("policy").get<std::string>();
    r.baseline_instance = doc.at("baseline_instance").get<std::string>();
    r.workload = doc.at("workload").get<std::string>();
    r.theta = doc.at("theta").get<double>();
    r.seed = doc.at("run_seed").get<std::uint64_t>();
    r.sim_start = doc.at("sim_start").get<std::int64_t>();
    r.sim_end = doc.at("sim_end").get<std::int64_t>();
    r.total_cost = doc.at("total_cost_usd").get<double>();
    r.jct_seconds = doc.at("jct_seconds").get<double>();
    r.pcr = doc.at("pcr").get<double>();
    r.pcr_alpha = doc.at("pcr_alpha").get<double>();
    r.free_steps_fraction = doc.at("free_steps_fraction").get<double>();
    r.total_steps = doc.at("total_steps").get<long>();
    r.free_steps = doc.at("free_steps").get<long>();
    r.predictions =
        doc.at("predictions").get<std::map<std::string, double>>();
    r.top_models = doc.at("top_models").get<std::vector<std::string>>();
    r.truth_known = doc.at("truth_known").get<bool>();
    r.top1_correct = doc.at("top1_correct").get<bool>();
    r.top3_correct = doc.at("top3_correct").get<bool>();
    for (const auto& row : doc.at("ledger")) {
      orchestrator::LedgerRow lr;
      lr.hp = row.at("job").get<std::string>();
      lr.instance = row.at("instance").get<std::string>();
      lr.start = row.at("start").get<std::int64_t>();
      lr.end = row.at("end").get<std::int64_t>();
      lr.reason = market::end_reason_from_string(row.at("reason"));
      lr.charge = row.at("charge").get<double>();
      lr.refunded = row.at("refunded").get<bool>();
      lr.steps = row.at("steps").get<long>();
      r.ledger.push_back(lr);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad report file: ") + e.what());
  }
  return r;
}

void write_ledger_csv(std::ostream& out, const orchestrator::Report& report,
                      const FileMeta& meta) {
  write_meta_comment(out, meta);
  out << "job,instance,start,end,reason,charge,refunded,steps\n";
  for (const auto& row : report.ledger) {
    out << row.hp << ',' << row.instance << ',' << row.start << ',' << row.end
        << ',' << market::to_string(row.reason) << ',' << dtos(row.charge)
        << ',' << (row.refunded ? 1 : 0) << ',' << row.steps << '\n';
  }
}

std::vector<PcrRow> normalized_pcr(
    const std::vector<std::pair<std::string, orchestrator::Report>>& runs,
    const std::string& reference) {
  double alpha = 0.0;
  bool found = false;
  for (const auto& [name, rep] : runs) {
    if (name == reference) {
      alpha = rep.jct_cost_product();
      found = true;
    }
  }
  if (!found) throw DataError("reference run '" + reference + "' not present");
  std::vector<PcrRow> rows;
  for (const auto& [name, rep] : runs) {
    orchestrator::Report copy = rep;
    copy.apply_pcr_alpha(alpha);
    rows.push_back({name, copy.total_cost, copy.jct_seconds, copy.pcr});
  }
  return rows;
}

void write_pcr_csv(std::ostream& out, const std::vector<PcrRow>& rows,
                   const FileMeta& meta) {
  write_meta_comment(out, meta);
  out << "run,cost_usd,jct_seconds,pcr\n";
  for (const auto& row : rows) {
    out << row.run << ',' << dtos(row.cost) << ',' << dtos(row.jct) << ','
        << dtos(row.pcr) << '\n';
  }
}

std::vector<SweepRow> sweep_rows(
    const std::vector<std::pair<double, orchestrator::Report>>& runs,
    double reference_alpha) {
  std::vector<SweepRow> rows;
  for (const auto& [theta, rep] : runs) {
    orchestrator::Report copy = rep;
    copy.apply_pcr_alpha(reference_alpha);
    SweepRow row;
    row.theta = theta;
    row.cost = copy.total_cost;
    row.jct = copy.jct_seconds;
    row.pcr = copy.pcr;
    row.free_steps_fraction = copy.free_steps_fraction;
    row.top1_correct = copy.top1_correct;
    row.top3_correct = copy.top3_correct;
    row.cost_reversal = !rows.empty() && row.cost < rows.back().cost;
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const FileMeta& meta) {
  write_meta_comment(out, meta);
  out << "theta,cost_usd,jct_seconds,pcr,free_steps_fraction,top1_correct,"
         "top3_correct,cost_reversal\n";
  for (const auto& row : rows) {
    out << dtos(row.theta) << ',' << dtos(row.cost) << ',' << dtos(row.jct)
        << ',' << dtos(row.pcr) << ',' << dtos(row.free_steps_fraction) << ','
        << (row.top1_correct ? 1 : 0) << ',' << (row.top3_correct ? 1 : 0)
        << ',' << (row.cost_reversal ? 1 : 0) << '\n';
  }
}

}  // namespace spotsim::report
