// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_MEASURED_CURVE_HPP
#define RIVEST_MEASURED_CURVE_HPP

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace rivest
{

/// A breakthrough record at distance `length` (m) from the release point.
/// Times in seconds, strictly increasing; concentrations finite and >= 0.
struct MeasuredCurve
{
  std::vector<double> times;
  std::vector<double> concentrations;
  std::vector<double> weights; ///< midpoint interval of each sample (s)
  double length = 0.0;
  nlohmann::json metadata = nlohmann::json::object();
  std::string name;

  std::size_t size() const { return times.size(); }
  /// Earliest sample attaining the maximum concentration.
  std::size_t peak_index() const;
  double t_peak() const { return times[peak_index()]; }
  /// L / t_peak, the velocity of the peak.
  double peak_velocity() const { return length / t_peak(); }
  bool peak_interior() const;
};

/// Builds and validates a curve (>= 2 samples); weights from `midpoint_weights`.
MeasuredCurve make_curve(std::vector<double> times, std::vector<double> concentrations, double length,
                         nlohmann::json metadata = nlohmann::json::object());

/// Delta_i = (t_{i+1} - t_{i-1}) / 2 with one-sided halves at both ends.
std::vector<double> midpoint_weights(std::span<const double> times);

/// Estimation-grade checks: >= 4 samples, positive mass, positive peak time.
void require_estimable(const MeasuredCurve& curve);

/// Reads `time_s,concentration` CSV plus a JSON sidecar carrying `reach_length_m`.
MeasuredCurve read_curve(const std::filesystem::path& csv, const std::filesystem::path& meta);

/// Sidecar path convention: btc.csv -> btc.json.
std::filesystem::path default_sidecar(const std::filesystem::path& csv);

} // namespace rivest

#endif // RIVEST_MEASURED_CURVE_HPP
