#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spotsim/market.hpp"
#include "spotsim/nn.hpp"

namespace spotsim::revpred {

inline constexpr int kHistoryMinutes = 59;
inline constexpr std::int64_t kLookahead = market::kHour;

struct FeatureRecord {
  double current_price = 0.0;          // USD/hr
  double avg_price_1h = 0.0;           // USD/hr
  int num_changes_1h = 0;
  std::int64_t time_since_last_change = 0;  // seconds
  bool is_workday = false;
  int hour_of_day = 0;  // 0..23 UTC
};

// Features over (t - 1h, t]; needs an hour of trace history before t.
FeatureRecord engineer_features(const market::PriceTrace& trace,
                                std::int64_t t);

// Ceiling price used when labeling training data: current price plus the
// trimmed mean of the absolute minute-to-minute deltas of the past hour
// (smallest and largest 20% discarded). With `literal_denominator` the sum
// divides by 0.6 * delta-count over strictly interior indices instead of the
// retained-term count.
double training_max_price(const market::PriceTrace& trace, std::int64_t t,
                          bool literal_denominator = false);

// Ceiling price used at provisioning time: current price plus a uniform
// draw from [0.00001, 0.2].
double inference_max_price(double current_price, std::mt19937_64& rng);

// True when any grid price in (t, t + 1h] strictly exceeds max_price.
bool label_sample(const market::PriceTrace& trace, std::int64_t t,
                  double max_price);

struct LabeledSample {
  std::vector<FeatureRecord> history;  // exactly kHistoryMinutes records
  FeatureRecord present;
  double max_price = 0.0;
  bool label = false;
  std::int64_t t = 0;
};

struct ClassBalance {
  double phi_plus = 0.0;
  double phi_minus = 1.0;

  bool trainable() const { return phi_plus > 0.0 && phi_plus < 1.0; }
};

struct Dataset {
  std::string trace_id;
  long stride = 60;
  std::vector<LabeledSample> samples;
  ClassBalance balance;
};

// Per-minute feature rows; samples are history windows over these rows. This
// is the columnar cache representation.
struct FeatureTable {
  struct Row {
    std::int64_t t = 0;
    FeatureRecord record;
    double max_price = 0.0;
    bool label = false;
  };
  std::string trace_id;
  long stride = 60;
  std::vector<Row> rows;
};

FeatureTable build_feature_table(const market::PriceTrace& trace,
                                 long stride = 60,
                                 bool literal_denominator = false);
Dataset assemble_dataset(const FeatureTable& table);
Dataset build_dataset(const market::PriceTrace& trace, long stride = 60,
                      bool literal_denominator = false);

void write_feature_table_csv(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table_csv(std::istream& in);

// Odds correction mapping the raw network output through the training-set
// class balance: P/(1-P) = p_hat * phi_minus / ((1-p_hat) * phi_plus).
double calibrate(double p_hat, const ClassBalance& balance);

struct NormStats {
  nn::Vector mean;   // per normalized-input feature
  nn::Vector stdev;  // same length, floored away from zero
  double on_demand_price = 1.0;
};

struct TrainConfig {
  std::string architecture = "sequence";  // "sequence" | "logistic"
  int epochs = 8;
  double learning_rate = 0.01;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int hidden = 32;
  int lstm_layers = 3;
  int dense_dim = 16;
};

// A trained revocation-probability model for one spot market: architecture,
// parameters, the normalization statistics and class balance frozen at
// training time. Immutable once trained; inference is safe to share across
// threads.
class PredictorModel {
 public:
  PredictorModel() = default;
  PredictorModel(std::string architecture, std::shared_ptr<nn::Model> net,
                 NormStats norm, ClassBalance balance, TrainConfig config,
                 std::string instance);

  const std::string& architecture() const { return architecture_; }
  const std::string& instance() const { return instance_; }
  const ClassBalance& balance() const { return balance_; }
  const NormStats& norm() const { return norm_; }
  const TrainConfig& train_config() const { return config_; }
  const nn::Model& net() const { return *net_; }

  nn::EncodedSample encode(const std::vector<FeatureRecord>& history,
                           const FeatureRecord& present,
                           double max_price) const;

  // Raw network output.
  double raw_predict(const std::vector<FeatureRecord>& history,
                     const FeatureRecord& present, double max_price) const;
  // Calibrated probability of revocation within the next hour.
  double predict(const std::vector<FeatureRecord>& history,
                 const FeatureRecord& present, double max_price) const;

 private:
  std::string architecture_;
  std::shared_ptr<nn::Model> net_;
  NormStats norm_;
  ClassBalance balance_;
  TrainConfig config_;
  std::string instance_;
};

// Trains one model on the dataset; deterministic for a fixed config seed.
// Throws TrainError when the dataset has a single class.
PredictorModel train(const Dataset& dataset, const TrainConfig& config,
                     const market::InstanceType& instance);

struct EvalResult {
  double accuracy = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Thresholds the calibrated probability at 0.5.
EvalResult evaluate(const PredictorModel& model,
                    const std::vector<LabeledSample>& samples);

void save_model_json(std::ostream& out, const PredictorModel& model,
                     const std::string& config_hash = "");
PredictorModel load_model_json(std::istream& in);

}  // namespace spotsim::revpred
