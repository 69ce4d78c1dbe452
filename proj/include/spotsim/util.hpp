#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spotsim {

inline constexpr const char* kToolVersion = "0.1.0";

// Bad or malformed input data (parse errors, schema violations, unknown names).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failures inside a simulation run (horizon exhaustion, rejected acquisitions).
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Curve-fitting failures (underdetermined stages, no admissible candidate).
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Predictor training failures (single-class datasets, bad configs).
struct TrainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace timeutil {

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int year, int month, int day);

// Parses either integer epoch seconds or an ISO-8601 timestamp
// ("YYYY-MM-DD[ T]HH:MM:SS[.frac][Z|+hh:mm]", offset applied). Throws DataError.
std::int64_t parse_timestamp(std::string_view text);

// 0=Sunday .. 6=Saturday, UTC.
int utc_weekday(std::int64_t epoch_seconds);

// Monday..Friday in UTC.
bool is_utc_workday(std::int64_t epoch_seconds);

// 0..23, UTC.
int utc_hour(std::int64_t epoch_seconds);

}  // namespace timeutil

// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Derives an independent RNG seed from a base seed and a stream tag.
std::uint64_t mix_seed(std::uint64_t base, std::string_view tag);

// Splits one delimiter-separated line; does not trim quotes (the formats here
// never quote fields).
std::vector<std::string> split_fields(const std::string& line, char delim = ',');

// Shortest round-trip decimal rendering; stable across runs of the same build.
std::string dtos(double value);

std::string trim_copy(std::string_view s);

}  // namespace spotsim
