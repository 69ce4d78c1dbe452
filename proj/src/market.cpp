#include "spotsim/market.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>

namespace spotsim::market {

Catalog::Catalog(std::vector<InstanceType> instances)
    : instances_(std::move(instances)) {
  std::set<std::string> names;
  for (const auto& inst : instances_) {
    if (inst.cpus < 1) throw DataError("instance " + inst.name + ": cpus < 1");
    if (inst.on_demand_price <= 0.0) {
      throw DataError("instance " + inst.name + ": on-demand price <= 0");
    }
    if (!names.insert(inst.name).second) {
      throw DataError("duplicate instance name: " + inst.name);
    }
  }
}

const InstanceType& Catalog::at(const std::string& name) const {
  if (const InstanceType* p = find(name)) return *p;
  throw DataError("unknown instance type: " + name);
}

const InstanceType* Catalog::find(const std::string& name) const noexcept {
  for (const auto& inst : instances_) {
    if (inst.name == name) return &inst;
  }
  return nullptr;
}

Catalog default_catalog() {
  return Catalog({
      {"r4.large", 2, 15.25, 0.133},
      {"r3.xlarge", 4, 30.0, 0.33},
      {"r4.xlarge", 4, 30.5, 0.266},
      {"m4.2xlarge", 8, 32.0, 0.4},
      {"r4.2xlarge", 8, 61.0, 0.532},
      {"m4.4xlarge", 16, 64.0, 0.8},
  });
}

Catalog load_catalog_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty catalog file");
  std::vector<InstanceType> instances;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 4) {
      throw DataError("catalog line " + std::to_string(lineno) +
                      ": expected 4 fields");
    }
    InstanceType inst;
    inst.name = trim_copy(fields[0]);
    try {
      inst.cpus = std::stoi(fields[1]);
      inst.memory_gb = std::stod(fields[2]);
      inst.on_demand_price = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw DataError("catalog line " + std::to_string(lineno) +
                      ": non-numeric field");
    }
    instances.push_back(std::move(inst));
  }
  return Catalog(std::move(instances));
}

void write_catalog_csv(std::ostream& out, const Catalog& catalog) {
  out << "name,cpus,memory_gb,on_demand_price\n";
  for (const auto& inst : catalog.instances()) {
    out << inst.name << ',' << inst.cpus << ',' << dtos(inst.memory_gb) << ','
        << dtos(inst.on_demand_price) << '\n';
  }
}

std::string to_string(EndReason reason) {
  switch (reason) {
    case EndReason::revoked: return "revoked";
    case EndReason::self_shutdown: return "self_shutdown";
    case EndReason::finished: return "finished";
  }
  return "unknown";
}

EndReason end_reason_from_string(const std::string& text) {
  if (text == "revoked") return EndReason::revoked;
  if (text == "self_shutdown") return EndReason::self_shutdown;
  if (text == "finished") return EndReason::finished;
  throw DataError("unknown end reason: " + text);
}

double BillingLedger::total_charge() const {
  double total = 0.0;
  for (const auto& rec : records) total += rec.charge;
  return total;
}

std::vector<PriceTrace> ingest_trace(std::istream& in,
                                     std::vector<RowError>* row_errors) {
  std::string line;
  // Leading '#' lines carry provenance metadata.
  do {
    if (!std::getline(in, line)) return {};
  } while (!line.empty() && line[0] == '#');
  auto header = split_fields(trim_copy(line));
  if (header.size() != 3 || trim_copy(header[0]) != "timestamp" ||
      trim_copy(header[1]) != "instance_type" || trim_copy(header[2]) != "price") {
    throw DataError("expected header 'timestamp,instance_type,price'");
  }

  std::map<std::string, std::vector<PricePoint>> raw;
  std::size_t lineno = 1;
  auto fail = [&](const std::string& msg) {
    if (row_errors) {
      row_errors->push_back({lineno, msg});
    } else {
      throw DataError("line " + std::to_string(lineno) + ": " + msg);
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (trim_copy(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 3) {
      fail("expected 3 fields, got " + std::to_string(fields.size()));
      continue;
    }
    std::int64_t ts = 0;
    try {
      ts = timeutil::parse_timestamp(fields[0]);
    } catch (const DataError& e) {
      fail(e.what());
      continue;
    }
    const std::string inst = trim_copy(fields[1]);
    if (inst.empty()) {
      fail("empty instance_type");
      continue;
    }
    double price = 0.0;
    try {
      std::size_t used = 0;
      price = std::stod(trim_copy(fields[2]), &used);
      if (used != trim_copy(fields[2]).size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail("non-numeric price '" + trim_copy(fields[2]) + "'");
      continue;
    }
    if (!(price > 0.0) || !std::isfinite(price)) {
      fail("price must be positive, got " + fields[2]);
      continue;
    }
    raw[inst].push_back({ts, price});
  }

  std::vector<PriceTrace> traces;
  traces.reserve(raw.size());
  for (auto& [name, points] : raw) {
    std::stable_sort(points.begin(), points.end(),
                     [](const PricePoint& a, const PricePoint& b) {
                       return a.timestamp < b.timestamp;
                     });
    // Same-timestamp duplicates collapse to the last record seen.
    std::vector<PricePoint> dedup;
    dedup.reserve(points.size());
    for (const auto& p : points) {
      if (!dedup.empty() && dedup.back().timestamp == p.timestamp) {
        dedup.back() = p;
      } else {
        dedup.push_back(p);
      }
    }
    traces.push_back({name, std::move(dedup)});
  }
  return traces;
}

PriceTrace regularize(const PriceTrace& trace, std::int64_t interval) {
  if (trace.empty()) throw DataError("cannot regularize an empty trace");
  if (interval <= 0) throw DataError("grid interval must be positive");
  const std::int64_t origin = trace.start_time();
  const std::int64_t span = trace.end_time() - origin;
  const std::int64_t steps = span / interval;

  PriceTrace out;
  out.instance = trace.instance;
  out.points.reserve(static_cast<std::size_t>(steps) + 1);
  std::size_t idx = 0;
  for (std::int64_t i = 0; i <= steps; ++i) {
    const std::int64_t t = origin + i * interval;
    while (idx + 1 < trace.points.size() &&
           trace.points[idx + 1].timestamp <= t) {
      ++idx;
    }
    out.points.push_back({t, trace.points[idx].price});
  }
  return out;
}

namespace {

// Index of the last point with timestamp <= t. Requires t >= start.
std::size_t floor_index(const PriceTrace& trace, std::int64_t t) {
  auto it = std::upper_bound(trace.points.begin(), trace.points.end(), t,
                             [](std::int64_t v, const PricePoint& p) {
                               return v < p.timestamp;
                             });
  if (it == trace.points.begin()) {
    throw DataError("query at t=" + std::to_string(t) + " precedes trace start");
  }
  return static_cast<std::size_t>(it - trace.points.begin()) - 1;
}

}  // namespace

double price_at(const PriceTrace& trace, std::int64_t t) {
  if (trace.empty()) throw DataError("empty trace");
  return trace.points[floor_index(trace, t)].price;
}

double avg_price(const PriceTrace& trace, std::int64_t t, std::int64_t window) {
  if (trace.empty()) throw DataError("empty trace");
  if (window <= 0) throw DataError("window must be positive");
  const std::int64_t lo = t - window;
  if (lo < trace.start_time()) {
    throw DataError("insufficient price history at t=" + std::to_string(t));
  }
  if (t > trace.end_time()) {
    throw DataError("t=" + std::to_string(t) + " beyond trace end");
  }

  std::size_t i = floor_index(trace, lo);
  // Constant windows must average to that constant exactly.
  double lo_price = trace.points[i].price;
  bool constant = true;
  for (std::size_t j = i; j < trace.points.size() &&
                          trace.points[j].timestamp <= t; ++j) {
    if (trace.points[j].price != lo_price) {
      constant = false;
      break;
    }
  }
  if (constant) return lo_price;

  double weighted = 0.0;
  double covered = 0.0;
  std::int64_t cursor = lo;
  while (cursor < t) {
    const std::int64_t seg_end =
        (i + 1 < trace.points.size())
            ? std::min<std::int64_t>(trace.points[i + 1].timestamp, t)
            : t;
    weighted += trace.points[i].price * static_cast<double>(seg_end - cursor);
    covered += static_cast<double>(seg_end - cursor);
    cursor = seg_end;
    if (i + 1 < trace.points.size() && trace.points[i + 1].timestamp <= cursor) {
      ++i;
    }
  }
  return weighted / covered;
}

std::optional<std::int64_t> revocation_time(const PriceTrace& trace,
                                            std::int64_t t_start,
                                            double max_price) {
  if (price_at(trace, t_start) > max_price) {
    throw SimError("acquisition rejected: market price " +
                   dtos(price_at(trace, t_start)) + " above max price " +
                   dtos(max_price) + " at t=" + std::to_string(t_start));
  }
  std::size_t i = floor_index(trace, t_start);
  for (std::size_t j = i + 1; j < trace.points.size(); ++j) {
    if (trace.points[j].price > max_price) return trace.points[j].timestamp;
  }
  return std::nullopt;
}

std::pair<double, bool> bill(const PriceTrace& trace, const Acquisition& acq) {
  if (acq.end_time < acq.start_time) {
    throw DataError("acquisition ends before it starts");
  }
  const bool refunded = acq.end_reason == EndReason::revoked &&
                        acq.end_time - acq.start_time < kHour;
  if (refunded) return {0.0, true};

  double charge = 0.0;
  std::int64_t cursor = acq.start_time;
  std::size_t i = floor_index(trace, cursor);
  while (cursor < acq.end_time) {
    const std::int64_t seg_end =
        (i + 1 < trace.points.size())
            ? std::min<std::int64_t>(trace.points[i + 1].timestamp, acq.end_time)
            : acq.end_time;
    charge += trace.points[i].price * static_cast<double>(seg_end - cursor) /
              static_cast<double>(kHour);
    cursor = seg_end;
    if (i + 1 < trace.points.size() && trace.points[i + 1].timestamp <= cursor) {
      ++i;
    }
  }
  return {charge, false};
}

void write_trace_csv(std::ostream& out, const PriceTrace& trace) {
  out << "timestamp,instance_type,price\n";
  for (const auto& p : trace.points) {
    out << p.timestamp << ',' << trace.instance << ',' << dtos(p.price) << '\n';
  }
}

}  // namespace spotsim::market
