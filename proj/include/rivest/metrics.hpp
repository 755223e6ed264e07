// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_METRICS_HPP
#define RIVEST_METRICS_HPP

#include <cstddef>
#include <span>

#include <json.hpp>

#include "rivest/measured_curve.hpp"

namespace rivest
{

/// Evaluation window end as a multiple of the measured peak time.
inline constexpr double kWindowPeaks = 24.0;

struct MetricReport
{
  double rmse = 0.0;
  double kld = 0.0; ///< nats
  double window_end = 0.0;
  std::size_t samples = 0;
};

nlohmann::json to_json(const MetricReport& report);

/// RMS difference of the Delta-weighted, sum-normalized measured and model values.
/// Only samples with t <= 24 t_peak enter.
double rmse(const MeasuredCurve& curve, std::span<const double> model);

/// sum p (ln p - ln q) over the same window; q floored at 1e-300.
double kld(const MeasuredCurve& curve, std::span<const double> model);

MetricReport evaluate(const MeasuredCurve& curve, std::span<const double> model);

/// Window-free kernels on raw (value, weight) triples.
double rmse_weighted(std::span<const double> measured, std::span<const double> model,
                     std::span<const double> weights);
double kld_weighted(std::span<const double> measured, std::span<const double> model,
                    std::span<const double> weights);

} // namespace rivest

#endif // RIVEST_METRICS_HPP
