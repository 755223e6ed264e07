// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_ESTIMATION_RESULT_HPP
#define RIVEST_ESTIMATION_RESULT_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rivest/laplace_solver.hpp"
#include "rivest/metrics.hpp"
#include "rivest/synthetic_dataset.hpp"

namespace rivest
{

enum class Method
{
  PBI,
  NNI,
  Exhaustive,
  LaplaceFit,
  Moments,
  AdeLS,
  AdePeak,
  LIPO,
  PBIRefined,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

/// Estimated velocity and parameters of one curve plus diagnostics.
struct EstimationResult
{
  Method method = Method::PBI;
  Formulation formulation = Formulation::SemiInfEquivInfinite;
  double velocity = 0.0; ///< m/s
  DimensionlessParams params;
  bool exchange = true;  ///< false for the exchange-free fits (only Pe is meaningful)
  double residual = 0.0; ///< distance to the synthetic manifold or fit loss
  std::vector<double> rho;
  std::vector<std::size_t> vertices;
  std::optional<MetricReport> metrics;
  bool converged = true;
  std::string note;

  /// Dispersion coefficient D = L v / Pe for a reach of length L.
  double dispersion(double length) const { return length * velocity / params.y[0]; }
};

nlohmann::json to_json(const EstimationResult& result, double length = 0.0);
EstimationResult result_from_json(const nlohmann::json& j);

} // namespace rivest

#endif // RIVEST_ESTIMATION_RESULT_HPP
