#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spotsim/util.hpp"

namespace spotsim::market {

inline constexpr std::int64_t kGridInterval = 60;     // seconds between grid points
inline constexpr std::int64_t kHour = 3600;           // refund horizon / price window
inline constexpr double kCurrencyTolerance = 1e-9;    // USD comparison tolerance

struct InstanceType {
  std::string name;
  int cpus = 1;
  double memory_gb = 0.0;
  double on_demand_price = 0.0;  // USD per hour
};

// Reference data for the instance pool. Names are unique; lookups are by name.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<InstanceType> instances);

  const InstanceType& at(const std::string& name) const;
  const InstanceType* find(const std::string& name) const noexcept;
  const std::vector<InstanceType>& instances() const { return instances_; }
  bool empty() const { return instances_.empty(); }

 private:
  std::vector<InstanceType> instances_;
};

// The six reference instance types used throughout the demo data.
Catalog default_catalog();
Catalog load_catalog_csv(std::istream& in);
void write_catalog_csv(std::ostream& out, const Catalog& catalog);

struct PricePoint {
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  double price = 0.0;          // USD per hour
};

// Traces are immutable after ingestion; every query below is read-only and
// safe to share across threads.
struct PriceTrace {
  std::string instance;            // instance type name
  std::vector<PricePoint> points;  // strictly increasing timestamps

  bool empty() const { return points.empty(); }
  std::int64_t start_time() const { return points.front().timestamp; }
  std::int64_t end_time() const { return points.back().timestamp; }
};

enum class EndReason { revoked, self_shutdown, finished };

std::string to_string(EndReason reason);
EndReason end_reason_from_string(const std::string& text);

struct Acquisition {
  std::string instance;
  std::int64_t start_time = 0;
  double max_price = 0.0;  // ceiling declared at acquisition time
  std::int64_t end_time = 0;
  EndReason end_reason = EndReason::finished;
};

struct BillingRecord {
  Acquisition acquisition;
  double charge = 0.0;
  bool refunded = false;
};

struct BillingLedger {
  std::vector<BillingRecord> records;
  double total_charge() const;
};

struct RowError {
  std::size_t line = 0;
  std::string message;
};

// Reads delimiter-separated rows with header `timestamp,instance_type,price`
// and returns one raw trace per instance type, sorted by timestamp with
// same-timestamp duplicates collapsed to the last record. If `row_errors` is
// null, the first malformed row throws DataError; otherwise malformed rows are
// collected and skipped. Empty input yields an empty set.
std::vector<PriceTrace> ingest_trace(std::istream& in,
                                     std::vector<RowError>* row_errors = nullptr);

// Snaps a trace onto a regular grid anchored at its first timestamp. Values
// are forward-filled (last posted price carries); the grid ends at the last
// raw timestamp rounded down to the grid.
PriceTrace regularize(const PriceTrace& trace,
                      std::int64_t interval = kGridInterval);

// Last posted price at or before t. Requires t >= trace start.
double price_at(const PriceTrace& trace, std::int64_t t);

// Time-weighted mean of the price step function over [t - window, t].
// Requires t - window >= trace start and t <= trace end.
double avg_price(const PriceTrace& trace, std::int64_t t,
                 std::int64_t window = kHour);

// Earliest grid timestamp strictly after t_start whose price strictly exceeds
// max_price; absent when the trace never crosses. The current price at
// t_start must not already exceed max_price (acquisition precondition).
std::optional<std::int64_t> revocation_time(const PriceTrace& trace,
                                            std::int64_t t_start,
                                            double max_price);

// Per-second billing of the market price over [start, end); a revocation
// inside the first hour refunds the whole charge.
std::pair<double, bool> bill(const PriceTrace& trace, const Acquisition& acq);

void write_trace_csv(std::ostream& out, const PriceTrace& trace);

}  // namespace spotsim::market
