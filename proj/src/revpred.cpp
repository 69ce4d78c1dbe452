#include "spotsim/revpred.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "spotsim/util.hpp"

namespace spotsim::revpred {

namespace {

// Index of the last grid point at or before t; throws when t precedes the
// trace or runs past its end.
std::size_t bounded_floor_index(const market::PriceTrace& trace,
                                std::int64_t t) {
  if (trace.empty()) throw DataError("empty trace");
  if (t < trace.start_time() || t > trace.end_time()) {
    throw DataError("t=" + std::to_string(t) + " outside trace span");
  }
  auto it = std::upper_bound(
      trace.points.begin(), trace.points.end(), t,
      [](std::int64_t v, const market::PricePoint& p) { return v < p.timestamp; });
  return static_cast<std::size_t>(it - trace.points.begin()) - 1;
}

void require_grid(const market::PriceTrace& trace) {
  for (std::size_t i = 1; i < trace.points.size(); ++i) {
    if (trace.points[i].timestamp - trace.points[i - 1].timestamp !=
        market::kGridInterval) {
      throw DataError("trace " + trace.instance +
                      " is not on the regular grid; regularize it first");
    }
  }
}

}  // namespace

FeatureRecord engineer_features(const market::PriceTrace& trace,
                                std::int64_t t) {
  if (trace.empty() || t - market::kHour < trace.start_time()) {
    throw DataError("insufficient history for features at t=" +
                    std::to_string(t));
  }
  FeatureRecord rec;
  rec.current_price = market::price_at(trace, t);
  rec.avg_price_1h = market::avg_price(trace, t, market::kHour);

  const std::size_t at = bounded_floor_index(trace, t);
  int changes = 0;
  for (std::size_t i = at; i > 0; --i) {
    if (trace.points[i].timestamp <= t - market::kHour) break;
    if (trace.points[i].price != trace.points[i - 1].price) ++changes;
  }
  rec.num_changes_1h = changes;

  std::size_t set_at = at;
  while (set_at > 0 &&
         trace.points[set_at].price == trace.points[set_at - 1].price) {
    --set_at;
  }
  rec.time_since_last_change = t - trace.points[set_at].timestamp;

  rec.is_workday = timeutil::is_utc_workday(t);
  rec.hour_of_day = timeutil::utc_hour(t);
  return rec;
}

double training_max_price(const market::PriceTrace& trace, std::int64_t t,
                          bool literal_denominator) {
  if (trace.empty() || t - market::kHour < trace.start_time()) {
    throw DataError("insufficient history for ceiling price at t=" +
                    std::to_string(t));
  }
  const std::size_t at = bounded_floor_index(trace, t);
  std::vector<double> deltas;
  for (std::size_t i = at; i > 0; --i) {
    const std::int64_t ts = trace.points[i].timestamp;
    if (ts >= t) continue;  // deltas are taken strictly before t
    if (ts <= t - market::kHour) break;
    deltas.push_back(std::abs(trace.points[i].price - trace.points[i - 1].price));
  }
  if (deltas.size() < 5) {
    throw DataError("need at least 5 price deltas before t=" +
                    std::to_string(t) + ", have " +
                    std::to_string(deltas.size()));
  }
  std::sort(deltas.begin(), deltas.end());
  const long n = static_cast<long>(deltas.size());
  const double current = market::price_at(trace, t);

  if (literal_denominator) {
    // Strictly interior indices, sum scaled by 0.6 * n regardless of how
    // many terms that leaves.
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
      if (5 * i > n && 5 * i < 4 * n) sum += deltas[static_cast<std::size_t>(i)];
    }
    return current + sum / (0.6 * static_cast<double>(n));
  }

  const long cut = n / 5;  // drop this many from each tail
  double sum = 0.0;
  long kept = 0;
  for (long i = cut; i < n - cut; ++i) {
    sum += deltas[static_cast<std::size_t>(i)];
    ++kept;
  }
  return current + sum / static_cast<double>(kept);
}

double inference_max_price(double current_price, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> delta(0.00001, 0.2);
  return current_price + delta(rng);
}

bool label_sample(const market::PriceTrace& trace, std::int64_t t,
                  double max_price) {
  if (trace.empty() || t + kLookahead > trace.end_time()) {
    throw DataError("insufficient lookahead for label at t=" +
                    std::to_string(t));
  }
  std::size_t i = bounded_floor_index(trace, t);
  for (std::size_t j = i + 1; j < trace.points.size(); ++j) {
    if (trace.points[j].timestamp > t + kLookahead) break;
    if (trace.points[j].price > max_price) return true;
  }
  return false;
}

FeatureTable build_feature_table(const market::PriceTrace& trace, long stride,
                                 bool literal_denominator) {
  if (stride <= 0 || stride % market::kGridInterval != 0) {
    throw DataError("stride must be a positive multiple of the grid interval");
  }
  require_grid(trace);
  const std::int64_t first_row = trace.start_time() + market::kHour;
  const std::int64_t last_row = trace.end_time() - kLookahead;
  const std::int64_t first_sample =
      first_row + kHistoryMinutes * market::kGridInterval;
  if (trace.empty() || first_sample > last_row) {
    throw DataError("trace " + trace.instance +
                    " too short to build a dataset: needs history plus an "
                    "hour of lookahead");
  }
  FeatureTable table;
  table.trace_id = trace.instance;
  table.stride = stride;
  for (std::int64_t t = first_row; t <= last_row; t += market::kGridInterval) {
    FeatureTable::Row row;
    row.t = t;
    row.record = engineer_features(trace, t);
    row.max_price = training_max_price(trace, t, literal_denominator);
    row.label = label_sample(trace, t, row.max_price);
    table.rows.push_back(row);
  }
  return table;
}

Dataset assemble_dataset(const FeatureTable& table) {
  Dataset ds;
  ds.trace_id = table.trace_id;
  ds.stride = table.stride;
  const std::size_t step =
      static_cast<std::size_t>(table.stride / market::kGridInterval);
  long positives = 0;
  for (std::size_t i = kHistoryMinutes; i < table.rows.size(); i += step) {
    LabeledSample s;
    s.history.reserve(kHistoryMinutes);
    for (std::size_t j = i - kHistoryMinutes; j < i; ++j) {
      s.history.push_back(table.rows[j].record);
    }
    s.present = table.rows[i].record;
    s.max_price = table.rows[i].max_price;
    s.label = table.rows[i].label;
    s.t = table.rows[i].t;
    if (s.label) ++positives;
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) {
    throw DataError("dataset is empty after windowing");
  }
  ds.balance.phi_plus =
      static_cast<double>(positives) / static_cast<double>(ds.samples.size());
  ds.balance.phi_minus = 1.0 - ds.balance.phi_plus;
  return ds;
}

Dataset build_dataset(const market::PriceTrace& trace, long stride,
                      bool literal_denominator) {
  return assemble_dataset(
      build_feature_table(trace, stride, literal_denominator));
}

void write_feature_table_csv(std::ostream& out, const FeatureTable& table) {
  out << "# trace_id=" << table.trace_id << " stride=" << table.stride << '\n';
  out << "t,current_price,avg_price_1h,num_changes_1h,time_since_last_change,"
         "is_workday,hour_of_day,max_price,label\n";
  for (const auto& row : table.rows) {
    out << row.t << ',' << dtos(row.record.current_price) << ','
        << dtos(row.record.avg_price_1h) << ',' << row.record.num_changes_1h
        << ',' << row.record.time_since_last_change << ','
        << (row.record.is_workday ? 1 : 0) << ',' << row.record.hour_of_day
        << ',' << dtos(row.max_price) << ',' << (row.label ? 1 : 0) << '\n';
  }
}

FeatureTable read_feature_table_csv(std::istream& in) {
  FeatureTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# trace_id=", 0) != 0) {
    throw DataError("missing feature-table preamble");
  }
  {
    const std::size_t sp = line.find(" stride=");
    if (sp == std::string::npos) throw DataError("missing stride in preamble");
    table.trace_id = line.substr(11, sp - 11);
    table.stride = std::stol(line.substr(sp + 8));
  }
  std::getline(in, line);  // column header
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    auto f = split_fields(line);
    if (f.size() != 9) {
      throw DataError("feature table line " + std::to_string(lineno) +
                      ": expected 9 fields");
    }
    FeatureTable::Row row;
    try {
      row.t = std::stoll(f[0]);
      row.record.current_price = std::stod(f[1]);
      row.record.avg_price_1h = std::stod(f[2]);
      row.record.num_changes_1h = std::stoi(f[3]);
      row.record.time_since_last_change = std::stoll(f[4]);
      row.record.is_workday = std::stoi(f[5]) != 0;
      row.record.hour_of_day = std::stoi(f[6]);
      row.max_price = std::stod(f[7]);
      row.label = std::stoi(f[8]) != 0;
    } catch (const std::exception&) {
      throw DataError("feature table line " + std::to_string(lineno) +
                      ": bad field");
    }
    table.rows.push_back(row);
  }
  return table;
}

double calibrate(double p_hat, const ClassBalance& balance) {
  if (balance.phi_plus == balance.phi_minus) return p_hat;
  const double num = p_hat * balance.phi_minus;
  const double den = num + (1.0 - p_hat) * balance.phi_plus;
  if (!(den > 0.0)) return p_hat;
  return num / den;
}

PredictorModel::PredictorModel(std::string architecture,
                               std::shared_ptr<nn::Model> net, NormStats norm,
                               ClassBalance balance, TrainConfig config,
                               std::string instance)
    : architecture_(std::move(architecture)),
      net_(std::move(net)),
      norm_(std::move(norm)),
      balance_(balance),
      config_(std::move(config)),
      instance_(std::move(instance)) {}

namespace {

void raw_features(const FeatureRecord& rec, double od, double* out) {
  out[0] = rec.current_price / od;
  out[1] = rec.avg_price_1h / od;
  out[2] = static_cast<double>(rec.num_changes_1h);
  out[3] = static_cast<double>(rec.time_since_last_change);
  out[4] = rec.is_workday ? 1.0 : 0.0;
  out[5] = static_cast<double>(rec.hour_of_day);
}

}  // namespace

nn::EncodedSample PredictorModel::encode(
    const std::vector<FeatureRecord>& history, const FeatureRecord& present,
    double max_price) const {
  if (history.size() != kHistoryMinutes) {
    throw DataError("history must contain exactly " +
                    std::to_string(kHistoryMinutes) + " records");
  }
  nn::EncodedSample enc;
  enc.history.resize(kHistoryMinutes, 6);
  double buf[6];
  for (int i = 0; i < kHistoryMinutes; ++i) {
    raw_features(history[static_cast<std::size_t>(i)], norm_.on_demand_price,
                 buf);
    for (int c = 0; c < 6; ++c) {
      enc.history(i, c) = (buf[c] - norm_.mean[c]) / norm_.stdev[c];
    }
  }
  enc.present.resize(7);
  raw_features(present, norm_.on_demand_price, buf);
  for (int c = 0; c < 6; ++c) {
    enc.present[c] = (buf[c] - norm_.mean[c]) / norm_.stdev[c];
  }
  enc.present[6] =
      (max_price / norm_.on_demand_price - norm_.mean[6]) / norm_.stdev[6];
  return enc;
}

double PredictorModel::raw_predict(const std::vector<FeatureRecord>& history,
                                   const FeatureRecord& present,
                                   double max_price) const {
  return net_->p_hat(encode(history, present, max_price));
}

double PredictorModel::predict(const std::vector<FeatureRecord>& history,
                               const FeatureRecord& present,
                               double max_price) const {
  return calibrate(raw_predict(history, present, max_price), balance_);
}

PredictorModel train(const Dataset& dataset, const TrainConfig& config,
                     const market::InstanceType& instance) {
  if (!dataset.balance.trainable()) {
    throw TrainError("dataset for " + instance.name +
                     " has a single class (phi_plus=" +
                     dtos(dataset.balance.phi_plus) + ") and is untrainable");
  }
  if (config.architecture != "sequence" && config.architecture != "logistic") {
    throw TrainError("unknown architecture: " + config.architecture);
  }

  // Normalization statistics pooled over every record the model will see.
  NormStats norm;
  norm.on_demand_price = instance.on_demand_price;
  norm.mean = nn::Vector::Zero(7);
  norm.stdev = nn::Vector::Zero(7);
  double count = 0.0;
  double buf[6];
  nn::Vector sum = nn::Vector::Zero(7), sumsq = nn::Vector::Zero(7);
  double max_sum = 0.0, max_sumsq = 0.0;
  for (const auto& s : dataset.samples) {
    for (const auto& rec : s.history) {
      raw_features(rec, norm.on_demand_price, buf);
      for (int c = 0; c < 6; ++c) {
        sum[c] += buf[c];
        sumsq[c] += buf[c] * buf[c];
      }
      count += 1.0;
    }
    raw_features(s.present, norm.on_demand_price, buf);
    for (int c = 0; c < 6; ++c) {
      sum[c] += buf[c];
      sumsq[c] += buf[c] * buf[c];
    }
    count += 1.0;
    const double mp = s.max_price / norm.on_demand_price;
    max_sum += mp;
    max_sumsq += mp * mp;
  }
  for (int c = 0; c < 6; ++c) {
    norm.mean[c] = sum[c] / count;
    const double var = std::max(0.0, sumsq[c] / count - norm.mean[c] * norm.mean[c]);
    norm.stdev[c] = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
  }
  const double n_samples = static_cast<double>(dataset.samples.size());
  norm.mean[6] = max_sum / n_samples;
  const double mvar =
      std::max(0.0, max_sumsq / n_samples - norm.mean[6] * norm.mean[6]);
  norm.stdev[6] = std::sqrt(mvar) > 1e-12 ? std::sqrt(mvar) : 1.0;

  std::shared_ptr<nn::Model> net;
  if (config.architecture == "sequence") {
    nn::SequenceConfig sc;
    sc.input_dim = 6;
    sc.present_dim = 7;
    sc.hidden = config.hidden;
    sc.lstm_layers = config.lstm_layers;
    sc.dense_dim = config.dense_dim;
    net = std::make_shared<nn::SequenceNet>(sc);
  } else {
    net = std::make_shared<nn::LogisticNet>(nn::LogisticConfig{6, 7});
  }
  net->init_params(mix_seed(config.seed, "revpred/init"));

  PredictorModel staging(config.architecture, net, norm, dataset.balance,
                         config, instance.name);
  std::vector<nn::EncodedSample> encoded;
  encoded.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    nn::EncodedSample enc = staging.encode(s.history, s.present, s.max_price);
    enc.label = s.label ? 1.0 : 0.0;
    encoded.push_back(std::move(enc));
  }

  nn::LossWeights weights{dataset.balance.phi_minus, dataset.balance.phi_plus};
  nn::TrainOptions options;
  options.epochs = config.epochs;
  options.learning_rate = config.learning_rate;
  options.batch_size = config.batch_size;
  options.seed = config.seed;
  nn::train_model(*net, encoded, weights, options);

  return PredictorModel(config.architecture, net, norm, dataset.balance,
                        config, instance.name);
}

EvalResult evaluate(const PredictorModel& model,
                    const std::vector<LabeledSample>& samples) {
  if (samples.empty()) throw DataError("empty evaluation set");
  EvalResult r;
  for (const auto& s : samples) {
    const double p = model.predict(s.history, s.present, s.max_price);
    const bool predicted = p >= 0.5;
    if (predicted && s.label) ++r.tp;
    if (predicted && !s.label) ++r.fp;
    if (!predicted && s.label) ++r.fn;
    if (!predicted && !s.label) ++r.tn;
  }
  const double total = static_cast<double>(samples.size());
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  const double prec =
      r.tp + r.fp > 0 ? double(r.tp) / double(r.tp + r.fp) : 0.0;
  const double rec = r.tp + r.fn > 0 ? double(r.tp) / double(r.tp + r.fn) : 0.0;
  r.f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  return r;
}

void save_model_json(std::ostream& out, const PredictorModel& model,
                     const std::string& config_hash) {
  const nn::Vector& p = model.net().params();
  std::vector<double> params(p.data(), p.data() + p.size());
  std::vector<double> mean(model.norm().mean.data(),
                           model.norm().mean.data() + model.norm().mean.size());
  std::vector<double> stdev(
      model.norm().stdev.data(),
      model.norm().stdev.data() + model.norm().stdev.size());
  nlohmann::json doc{
      {"meta",
       {{"version", kToolVersion},
        {"seed", model.train_config().seed},
        {"config_hash", config_hash}}},
      {"kind", "revpred-model"},
      {"architecture", model.architecture()},
      {"instance", model.instance()},
      {"balance",
       {{"phi_plus", model.balance().phi_plus},
        {"phi_minus", model.balance().phi_minus}}},
      {"norm",
       {{"mean", mean},
        {"stdev", stdev},
        {"on_demand_price", model.norm().on_demand_price}}},
      {"train",
       {{"epochs", model.train_config().epochs},
        {"learning_rate", model.train_config().learning_rate},
        {"batch_size", model.train_config().batch_size},
        {"seed", model.train_config().seed},
        {"hidden", model.train_config().hidden},
        {"lstm_layers", model.train_config().lstm_layers},
        {"dense_dim", model.train_config().dense_dim}}},
      {"params", params}};
  out << doc.dump(2) << '\n';
}

PredictorModel load_model_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model file: ") + e.what());
  }
  if (doc.value("kind", "") != "revpred-model") {
    throw DataError("not a predictor model file");
  }
  TrainConfig config;
  config.architecture = doc.at("architecture").get<std::string>();
  const auto& tr = doc.at("train");
  config.epochs = tr.at("epochs").get<int>();
  config.learning_rate = tr.at("learning_rate").get<double>();
  config.batch_size = tr.at("batch_size").get<int>();
  config.seed = tr.at("seed").get<std::uint64_t>();
  config.hidden = tr.at("hidden").get<int>();
  config.lstm_layers = tr.at("lstm_layers").get<int>();
  config.dense_dim = tr.at("dense_dim").get<int>();

  std::shared_ptr<nn::Model> net;
  if (config.architecture == "sequence") {
    nn::SequenceConfig sc;
    sc.hidden = config.hidden;
    sc.lstm_layers = config.lstm_layers;
    sc.dense_dim = config.dense_dim;
    net = std::make_shared<nn::SequenceNet>(sc);
  } else if (config.architecture == "logistic") {
    net = std::make_shared<nn::LogisticNet>(nn::LogisticConfig{});
  } else {
    throw DataError("unknown architecture in model file: " +
                    config.architecture);
  }
  const auto params = doc.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(params.size()) != net->layout().size()) {
    throw DataError("parameter count mismatch in model file");
  }
  for (Eigen::Index i = 0; i < net->layout().size(); ++i) {
    net->params()[i] = params[static_cast<std::size_t>(i)];
  }

  NormStats norm;
  const auto mean = doc.at("norm").at("mean").get<std::vector<double>>();
  const auto stdev = doc.at("norm").at("stdev").get<std::vector<double>>();
  norm.mean = Eigen::Map<const nn::Vector>(mean.data(), mean.size());
  norm.stdev = Eigen::Map<const nn::Vector>(stdev.data(), stdev.size());
  norm.on_demand_price = doc.at("norm").at("on_demand_price").get<double>();

  ClassBalance balance;
  balance.phi_plus = doc.at("balance").at("phi_plus").get<double>();
  balance.phi_minus = doc.at("balance").at("phi_minus").get<double>();

  return PredictorModel(config.architecture, net, norm, balance, config,
                        doc.at("instance").get<std::string>());
}

}  // namespace spotsim::revpred
