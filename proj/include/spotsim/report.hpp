#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spotsim/orchestrator.hpp"

namespace spotsim::report {

struct FileMeta {
  std::uint64_t seed = 0;
  std::string config_hash;  // hex FNV-1a of the resolved configuration
};

void write_report_json(std::ostream& out, const orchestrator::Report& report,
                       const FileMeta& meta, bool include_events = false);
orchestrator::Report read_report_json(std::istream& in);

// Flat per-acquisition rows: job, instance, start, end, reason, charge,
// refunded, steps.
void write_ledger_csv(std::ostream& out, const orchestrator::Report& report,
                      const FileMeta& meta);

struct PcrRow {
  std::string run;
  double cost = 0.0;
  double jct = 0.0;
  double pcr = 0.0;
};

// Normalizes every run against the reference run's JCT * cost product, so
// the reference's PCR is exactly one.
std::vector<PcrRow> normalized_pcr(
    const std::vector<std::pair<std::string, orchestrator::Report>>& runs,
    const std::string& reference);

void write_pcr_csv(std::ostream& out, const std::vector<PcrRow>& rows,
                   const FileMeta& meta);

struct SweepRow {
  double theta = 0.0;
  double cost = 0.0;
  double jct = 0.0;
  double pcr = 0.0;
  double free_steps_fraction = 0.0;
  bool top1_correct = false;
  bool top3_correct = false;
  bool cost_reversal = false;  // cost dropped relative to the previous theta
};

// Flags rows whose cost decreases versus the previous theta (refund-timing
// reversals).
std::vector<SweepRow> sweep_rows(
    const std::vector<std::pair<double, orchestrator::Report>>& runs,
    double reference_alpha);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows,
                     const FileMeta& meta);

}  // namespace spotsim::report
