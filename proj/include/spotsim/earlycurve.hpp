#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "spotsim/util.hpp"

namespace spotsim::earlycurve {

struct MetricPoint {
  long step = 0;       // evaluation index, >= 0
  double value = 0.0;  // loss-like metric, > 0
};

struct MetricTrace {
  std::vector<MetricPoint> points;  // strictly increasing steps

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  long last_step() const { return points.back().step; }
};

// Throws DataError on non-increasing steps or non-positive metrics.
void validate(const MetricTrace& trace);

// One fitted segment: metric(k) = 1 / (a0 k^2 + a1 k + a2) + a3 on [left, right).
struct Stage {
  long left = 0;   // inclusive
  long right = 0;  // exclusive
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;

  double eval(double k) const { return 1.0 / (a0 * k * k + a1 * k + a2) + a3; }
};

// Ordered stages whose intervals partition [0, horizon) exactly.
struct StagedCurve {
  std::vector<Stage> stages;
  long horizon = 0;
};

enum class Direction { minimize, maximize };

struct FitConfig {
  double xi = 0.5;            // stage-break threshold on the relative change
  double epsilon = 0.01;      // steadiness threshold
  int steadiness_window = 5;  // change rates that must stay below epsilon
  int a3_grid = 64;           // offset candidates below the observed minimum
  bool refine_a3 = true;      // polish the best grid candidate
  double theta = 0.7;         // early-shutdown rate
};

// True when the relative change at point index i jumps above xi after a
// steady window. Defined for i >= steadiness_window + 1.
bool stage_break(const MetricTrace& trace, std::size_t i, const FitConfig& cfg);

// Half-open step intervals produced by a left-to-right sweep of stage_break;
// the first starts at step 0 and the concatenation covers [0, last step + 1).
std::vector<std::pair<long, long>> partition_stages(const MetricTrace& trace,
                                                    const FitConfig& cfg);

// Fits one segment: a3 is searched over a grid on [0, min observed value) and
// (a0, a1, a2) come from non-negative least squares on 1/(value - a3) against
// [k^2, k, 1]; candidates are scored by residual in metric space. Needs at
// least 4 points.
Stage fit_stage(const MetricTrace& trace, std::size_t begin, std::size_t end,
                long left, long right, const FitConfig& cfg);

// Partitions and fits every stage. A trailing interval too short to fit is
// merged into its predecessor, so the result still partitions [0, horizon).
StagedCurve fit_curve(const MetricTrace& trace, const FitConfig& cfg);

// Single forced stage over the whole trace (the one-stage comparison model).
StagedCurve fit_single_stage(const MetricTrace& trace, const FitConfig& cfg);

// Evaluates the curve at step k; exactly one stage contributes for k inside
// the horizon, and the last stage extrapolates beyond it.
double predict_metric(const StagedCurve& curve, long k);

// Residual sum of squares of the curve against observed points (metric space).
double fit_residual(const StagedCurve& curve, const MetricTrace& trace);

// Fits the observed prefix and extrapolates the metric at max_trial_steps.
// The trace must cover at least theta * max_trial_steps steps.
double predict_final(const MetricTrace& trace, long max_trial_steps,
                     const FitConfig& cfg);

// True when the trailing `steadiness_window` relative changes all stay below
// epsilon. Needs steadiness_window + 1 points.
bool detect_plateau(const MetricTrace& trace, const FitConfig& cfg);

// Top-mcnt identifiers ordered by predicted metric; ties break on the
// identifier. mcnt must not exceed the number of predictions.
std::vector<std::string> rank_models(
    const std::map<std::string, double>& predictions, std::size_t mcnt,
    Direction direction);

// Two-column "step,metric" serialization.
MetricTrace read_metric_csv(std::istream& in);
void write_metric_csv(std::ostream& out, const MetricTrace& trace);

// Structured-text serialization of a fitted curve.
void write_curve_json(std::ostream& out, const StagedCurve& curve);
StagedCurve read_curve_json(std::istream& in);

}  // namespace spotsim::earlycurve
