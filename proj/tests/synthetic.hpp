#pragma once

// Shared synthetic fixtures for tests: price traces with engineered regime
// patterns and simple metric curves.

#include <cstdint>
#include <string>
#include <vector>

#include "spotsim/market.hpp"

namespace testsupport {

inline spotsim::market::PriceTrace grid_trace(
    const std::string& instance, std::int64_t start,
    const std::vector<double>& minute_prices) {
  spotsim::market::PriceTrace t;
  t.instance = instance;
  for (std::size_t i = 0; i < minute_prices.size(); ++i) {
    t.points.push_back({start + static_cast<std::int64_t>(i) * 60,
                        minute_prices[i]});
  }
  return t;
}

// Repeating regime: a calm stretch at the base price, a busy stretch that
// wiggles every minute, then a one-minute spike. Revocation labels over this
// trace are a deterministic function of the engineered features (the wiggle
// count and the time since the last change).
inline spotsim::market::PriceTrace regime_trace(const std::string& instance,
                                                std::int64_t start,
                                                int periods,
                                                double base = 0.10,
                                                double wiggle = 0.005,
                                                double spike = 0.45) {
  std::vector<double> prices;
  for (int p = 0; p < periods; ++p) {
    for (int m = 0; m < 70; ++m) prices.push_back(base);
    for (int m = 0; m < 60; ++m) {
      prices.push_back(m % 2 == 0 ? base + wiggle : base);
    }
    prices.push_back(spike);
  }
  return grid_trace(instance, start, prices);
}

// Flat trace that spikes far above the base inside one window per cycle:
// every acquisition that starts right after a spike is revoked by the next
// one, `cycle_minutes` later.
inline spotsim::market::PriceTrace spiking_trace(const std::string& instance,
                                                 std::int64_t start,
                                                 int minutes, int cycle_minutes,
                                                 double base = 0.10,
                                                 double spike = 1.0,
                                                 int offset_minutes = 0) {
  std::vector<double> prices;
  for (int m = 0; m < minutes; ++m) {
    const bool is_spike = cycle_minutes > 0 && m > 0 &&
                          (m - offset_minutes) % cycle_minutes == 0;
    prices.push_back(is_spike ? spike : base);
  }
  return grid_trace(instance, start, prices);
}

}  // namespace testsupport
