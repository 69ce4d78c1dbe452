#include "spotsim/earlycurve.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

namespace spotsim::earlycurve {

void validate(const MetricTrace& trace) {
  long prev = -1;
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const auto& p = trace.points[i];
    if (p.step < 0 || p.step <= prev) {
      throw DataError("metric steps must be strictly increasing (row " +
                      std::to_string(i) + ")");
    }
    if (!(p.value > 0.0) || !std::isfinite(p.value)) {
      throw DataError("metric values must be positive (row " +
                      std::to_string(i) + ")");
    }
    prev = p.step;
  }
}

namespace {

double change_rate(const MetricTrace& trace, std::size_t j) {
  const double prev = trace.points[j - 1].value;
  return std::abs(trace.points[j].value - prev) / prev;
}

void check_config(const FitConfig& cfg) {
  if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < cfg.xi)) {
    throw DataError("fit config requires 0 < epsilon < xi");
  }
  if (!(cfg.theta > 0.0) || cfg.theta > 1.0) {
    throw DataError("fit config requires theta in (0, 1]");
  }
  if (cfg.steadiness_window < 1 || cfg.a3_grid < 1) {
    throw DataError("fit config windows must be positive");
  }
}

}  // namespace

bool stage_break(const MetricTrace& trace, std::size_t i, const FitConfig& cfg) {
  const std::size_t w = static_cast<std::size_t>(cfg.steadiness_window);
  if (i >= trace.points.size() || i < w + 1) return false;
  if (!(change_rate(trace, i) > cfg.xi)) return false;
  for (std::size_t j = i - w; j < i; ++j) {
    if (!(change_rate(trace, j) < cfg.epsilon)) return false;
  }
  return true;
}

std::vector<std::pair<long, long>> partition_stages(const MetricTrace& trace,
                                                    const FitConfig& cfg) {
  if (trace.empty()) throw DataError("cannot partition an empty trace");
  check_config(cfg);
  validate(trace);
  std::vector<std::pair<long, long>> intervals;
  long left = 0;
  for (std::size_t i = 1; i < trace.points.size(); ++i) {
    if (stage_break(trace, i, cfg)) {
      intervals.emplace_back(left, trace.points[i].step);
      left = trace.points[i].step;
    }
  }
  intervals.emplace_back(left, trace.last_step() + 1);
  return intervals;
}

namespace {

struct Candidate {
  double score = std::numeric_limits<double>::infinity();
  Stage stage;
};

// Exact non-negative least squares for three coefficients: every support is
// enumerated, its unconstrained solution checked for feasibility, and the
// feasible solution with the smallest linearized residual wins.
Eigen::Vector3d nnls3(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_rss = y.squaredNorm();
  for (int mask = 1; mask < 8; ++mask) {
    std::vector<int> idx;
    for (int c = 0; c < 3; ++c) {
      if (mask & (1 << c)) idx.push_back(c);
    }
    Eigen::MatrixXd sub(basis.rows(), idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) sub.col(c) = basis.col(idx[c]);
    Eigen::VectorXd z = sub.colPivHouseholderQr().solve(y);
    bool feasible = true;
    for (int c = 0; c < z.size(); ++c) {
      if (z[c] < -1e-10) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    Eigen::Vector3d x = Eigen::Vector3d::Zero();
    for (std::size_t c = 0; c < idx.size(); ++c) x[idx[c]] = std::max(z[c], 0.0);
    const double rss = (basis * x - y).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      best = x;
    }
  }
  return best;
}

class StageFitter {
 public:
  StageFitter(const MetricTrace& trace, std::size_t begin, std::size_t end,
              long left, long right)
      : trace_(trace), begin_(begin), end_(end), left_(left), right_(right) {
    const std::size_t m = end - begin;
    scale_ = 1.0;
    min_value_ = std::numeric_limits<double>::infinity();
    for (std::size_t j = begin; j < end; ++j) {
      scale_ = std::max(scale_, static_cast<double>(trace.points[j].step));
      min_value_ = std::min(min_value_, trace.points[j].value);
    }
    basis_.resize(m, 3);
    for (std::size_t j = begin; j < end; ++j) {
      const double k = static_cast<double>(trace.points[j].step) / scale_;
      basis_(j - begin, 0) = k * k;
      basis_(j - begin, 1) = k;
      basis_(j - begin, 2) = 1.0;
    }
  }

  double min_value() const { return min_value_; }

  Candidate evaluate(double a3) const {
    Candidate cand;
    if (a3 < 0.0 || !(a3 < min_value_)) return cand;
    const std::size_t m = end_ - begin_;
    Eigen::VectorXd y(m);
    for (std::size_t j = begin_; j < end_; ++j) {
      y[j - begin_] = 1.0 / (trace_.points[j].value - a3);
    }
    const Eigen::Vector3d x = nnls3(basis_, y);
    Stage st;
    st.left = left_;
    st.right = right_;
    st.a0 = x[0] / (scale_ * scale_);
    st.a1 = x[1] / scale_;
    st.a2 = x[2];
    st.a3 = a3;
    // The denominator is non-decreasing in k, so positivity at the left bound
    // covers the whole interval and any extrapolation beyond it.
    const double kl = static_cast<double>(left_);
    if (!(st.a0 * kl * kl + st.a1 * kl + st.a2 > 0.0)) return cand;
    double rss = 0.0;
    for (std::size_t j = begin_; j < end_; ++j) {
      const double d = st.eval(static_cast<double>(trace_.points[j].step)) -
                       trace_.points[j].value;
      rss += d * d;
    }
    if (!std::isfinite(rss)) return cand;
    cand.score = rss;
    cand.stage = st;
    return cand;
  }

 private:
  const MetricTrace& trace_;
  std::size_t begin_, end_;
  long left_, right_;
  double scale_ = 1.0;
  double min_value_ = 0.0;
  Eigen::MatrixXd basis_;
};

}  // namespace

Stage fit_stage(const MetricTrace& trace, std::size_t begin, std::size_t end,
                long left, long right, const FitConfig& cfg) {
  if (end > trace.points.size() || begin >= end) {
    throw FitError("bad point range for stage fit");
  }
  if (end - begin < 4) {
    throw FitError("stage [" + std::to_string(left) + ", " +
                   std::to_string(right) + ") has " +
                   std::to_string(end - begin) +
                   " points; at least 4 are required");
  }
  StageFitter fitter(trace, begin, end, left, right);
  const double min_value = fitter.min_value();

  std::vector<double> grid;
  grid.push_back(0.0);
  for (int j = 1; j <= cfg.a3_grid; ++j) {
    grid.push_back(min_value * static_cast<double>(j) /
                   static_cast<double>(cfg.a3_grid + 1));
  }

  Candidate best;
  std::size_t best_idx = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    Candidate cand = fitter.evaluate(grid[j]);
    if (cand.score < best.score) {
      best = cand;
      best_idx = j;
    }
  }
  if (!std::isfinite(best.score)) {
    throw FitError("no admissible offset candidate for stage [" +
                   std::to_string(left) + ", " + std::to_string(right) + ")");
  }

  if (cfg.refine_a3) {
    // Golden-section polish between the grid neighbours of the best
    // candidate; the best evaluation ever seen is kept, so refinement can
    // only improve on the grid answer.
    double lo = best_idx > 0 ? grid[best_idx - 1] : 0.0;
    double hi = best_idx + 1 < grid.size() ? grid[best_idx + 1]
                                           : min_value * (1.0 - 1e-12);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    Candidate c1 = fitter.evaluate(x1);
    Candidate c2 = fitter.evaluate(x2);
    for (int it = 0; it < 64; ++it) {
      if (c1.score < best.score) best = c1;
      if (c2.score < best.score) best = c2;
      if (c1.score <= c2.score) {
        hi = x2;
        x2 = x1;
        c2 = c1;
        x1 = hi - inv_phi * (hi - lo);
        c1 = fitter.evaluate(x1);
      } else {
        lo = x1;
        x1 = x2;
        c1 = c2;
        x2 = lo + inv_phi * (hi - lo);
        c2 = fitter.evaluate(x2);
      }
    }
    if (c1.score < best.score) best = c1;
    if (c2.score < best.score) best = c2;
  }
  return best.stage;
}

namespace {

StagedCurve fit_intervals(const MetricTrace& trace,
                          std::vector<std::pair<long, long>> intervals,
                          const FitConfig& cfg) {
  // Index range per interval.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t idx = 0;
  for (const auto& [l, r] : intervals) {
    const std::size_t begin = idx;
    while (idx < trace.points.size() && trace.points[idx].step < r) ++idx;
    ranges.emplace_back(begin, idx);
  }
  // A trailing interval can be arbitrarily short (a break may land near the
  // end of the observed prefix); fold it into its predecessor.
  while (ranges.size() > 1 &&
         ranges.back().second - ranges.back().first < 4) {
    intervals[intervals.size() - 2].second = intervals.back().second;
    ranges[ranges.size() - 2].second = ranges.back().second;
    intervals.pop_back();
    ranges.pop_back();
  }

  StagedCurve curve;
  curve.horizon = trace.last_step() + 1;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    curve.stages.push_back(fit_stage(trace, ranges[i].first, ranges[i].second,
                                     intervals[i].first, intervals[i].second,
                                     cfg));
  }
  return curve;
}

}  // namespace

StagedCurve fit_curve(const MetricTrace& trace, const FitConfig& cfg) {
  if (trace.size() < 4) {
    throw FitError("trace has " + std::to_string(trace.size()) +
                   " points; at least 4 are required");
  }
  return fit_intervals(trace, partition_stages(trace, cfg), cfg);
}

StagedCurve fit_single_stage(const MetricTrace& trace, const FitConfig& cfg) {
  if (trace.size() < 4) {
    throw FitError("trace has " + std::to_string(trace.size()) +
                   " points; at least 4 are required");
  }
  validate(trace);
  std::vector<std::pair<long, long>> one{{0, trace.last_step() + 1}};
  return fit_intervals(trace, std::move(one), cfg);
}

double predict_metric(const StagedCurve& curve, long k) {
  if (curve.stages.empty()) throw FitError("empty curve");
  if (k < 0) throw DataError("step must be non-negative");
  for (const auto& st : curve.stages) {
    if (k >= st.left && k < st.right) return st.eval(static_cast<double>(k));
  }
  // Beyond the horizon the final stage keeps governing.
  return curve.stages.back().eval(static_cast<double>(k));
}

double fit_residual(const StagedCurve& curve, const MetricTrace& trace) {
  double rss = 0.0;
  for (const auto& p : trace.points) {
    const double d = predict_metric(curve, p.step) - p.value;
    rss += d * d;
  }
  return rss;
}

double predict_final(const MetricTrace& trace, long max_trial_steps,
                     const FitConfig& cfg) {
  if (trace.empty()) throw DataError("empty metric trace");
  validate(trace);
  const long covered = trace.last_step() + 1;
  const long required = static_cast<long>(
      std::ceil(cfg.theta * static_cast<double>(max_trial_steps) - 1e-9));
  if (covered < required) {
    throw FitError("trace covers " + std::to_string(covered) +
                   " steps but prediction requires " +
                   std::to_string(required));
  }
  return predict_metric(fit_curve(trace, cfg), max_trial_steps);
}

bool detect_plateau(const MetricTrace& trace, const FitConfig& cfg) {
  check_config(cfg);
  const std::size_t w = static_cast<std::size_t>(cfg.steadiness_window);
  if (trace.points.size() < w + 1) return false;
  for (std::size_t j = trace.points.size() - w; j < trace.points.size(); ++j) {
    if (!(change_rate(trace, j) < cfg.epsilon)) return false;
  }
  return true;
}

std::vector<std::string> rank_models(
    const std::map<std::string, double>& predictions, std::size_t mcnt,
    Direction direction) {
  if (mcnt > predictions.size()) {
    throw DataError("mcnt " + std::to_string(mcnt) + " exceeds " +
                    std::to_string(predictions.size()) + " predictions");
  }
  std::vector<std::pair<std::string, double>> order(predictions.begin(),
                                                    predictions.end());
  std::stable_sort(order.begin(), order.end(),
                   [direction](const auto& a, const auto& b) {
                     if (a.second != b.second) {
                       return direction == Direction::minimize
                                  ? a.second < b.second
                                  : a.second > b.second;
                     }
                     return a.first < b.first;
                   });
  std::vector<std::string> top;
  top.reserve(mcnt);
  for (std::size_t i = 0; i < mcnt; ++i) top.push_back(order[i].first);
  return top;
}

MetricTrace read_metric_csv(std::istream& in) {
  MetricTrace trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = trim_copy(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (lineno == 1 && trimmed.rfind("step", 0) == 0) continue;
    auto fields = split_fields(trimmed);
    if (fields.size() != 2) {
      throw DataError("line " + std::to_string(lineno) + ": expected 2 fields");
    }
    MetricPoint p;
    try {
      p.step = std::stol(trim_copy(fields[0]));
      p.value = std::stod(trim_copy(fields[1]));
    } catch (const std::exception&) {
      throw DataError("line " + std::to_string(lineno) + ": non-numeric field");
    }
    if (!trace.points.empty() && p.step <= trace.points.back().step) {
      throw DataError("line " + std::to_string(lineno) +
                      ": steps must be strictly increasing");
    }
    if (!(p.value > 0.0)) {
      throw DataError("line " + std::to_string(lineno) +
                      ": metric must be positive");
    }
    trace.points.push_back(p);
  }
  return trace;
}

void write_metric_csv(std::ostream& out, const MetricTrace& trace) {
  out << "step,metric\n";
  for (const auto& p : trace.points) {
    out << p.step << ',' << dtos(p.value) << '\n';
  }
}

void write_curve_json(std::ostream& out, const StagedCurve& curve) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : curve.stages) {
    stages.push_back({{"left", st.left},
                      {"right", st.right},
                      {"a0", st.a0},
                      {"a1", st.a1},
                      {"a2", st.a2},
                      {"a3", st.a3}});
  }
  nlohmann::json doc{{"horizon", curve.horizon}, {"stages", stages}};
  out << doc.dump(2) << '\n';
}

StagedCurve read_curve_json(std::istream& in) {
  nlohmann::json doc = nlohmann::json::parse(in);
  StagedCurve curve;
  curve.horizon = doc.at("horizon").get<long>();
  for (const auto& s : doc.at("stages")) {
    Stage st;
    st.left = s.at("left").get<long>();
    st.right = s.at("right").get<long>();
    st.a0 = s.at("a0").get<double>();
    st.a1 = s.at("a1").get<double>();
    st.a2 = s.at("a2").get<double>();
    st.a3 = s.at("a3").get<double>();
    curve.stages.push_back(st);
  }
  return curve;
}

}  // namespace spotsim::earlycurve
