// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// Adaptive Lipschitz global search with compass polish, and its use to refine
// estimates against the forward model.

#ifndef RIVEST_GLOBAL_OPT_HPP
#define RIVEST_GLOBAL_OPT_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rivest/estimation_result.hpp"
#include "rivest/measured_curve.hpp"
#include "rivest/synthetic_dataset.hpp"

namespace rivest
{

struct SearchBox
{
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t budget = 300; ///< loss evaluations, >= dim + 2
  std::uint64_t seed = 7;

  std::size_t dim() const { return lower.size(); }
};

void validate(const SearchBox& box);

struct LipoOptions
{
  double growth = 0.1;             ///< Lipschitz grid k_i = (1 + growth)^i
  int polish_every = 4;            ///< compass sweep after every E-th accepted global step
  double exploration = 0.1;        ///< probability of evaluating an unscreened uniform draw
  std::size_t max_rejections = 20000;
  double initial_radius = 0.1;     ///< compass step, fraction of each box width
  double min_radius = 1e-9;
};

struct LipoEvaluation
{
  std::vector<double> x;
  double value = 0.0;
  double incumbent = 0.0; ///< best value so far, including this one
  bool polish = false;
};

struct LipoResult
{
  std::vector<double> x;
  double value = 0.0;
  std::vector<LipoEvaluation> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `loss` over the box within box.budget evaluations. The first dim + 2
/// evaluations are uniform draws; a non-finite value throws NumericalError.
LipoResult lipo_minimize(const Objective& loss, const SearchBox& box, const LipoOptions& options = {});

/// Search coordinates: (ln v, ln y_1, ln y_2, ln y_3).
std::vector<double> to_search_point(double velocity, const DimensionlessParams& params);
void from_search_point(std::span<const double> x, KernelFamily family, double& velocity, DimensionlessParams& params);

/// Box around an estimate: v within +-v_frac, each y within [1 - y_frac, 1 + y_frac] times.
SearchBox refine_box(const EstimationResult& initial, double v_frac = 0.02, double y_frac = 0.3,
                     std::size_t budget = 300, std::uint64_t seed = 7);

/// Prior box: ln y within mu +- width * sqrt(diag(Sigma)); v in [v_lo, v_hi] * L / t_peak.
SearchBox prior_box(const LogNormalPrior& prior, KernelFamily family, double peak_velocity, double width = 4.0,
                    double v_lo = 0.9, double v_hi = 1.5, std::size_t budget = 1000, std::uint64_t seed = 7);

/// eps_RMSE of the forward model evaluated at the record's times; 1 (the upper bound of
/// the normalized metric) where the model carries no mass in the window.
double forward_rmse(const MeasuredCurve& curve, double velocity, const DimensionlessParams& params,
                    Formulation formulation, const InversionOptions& inversion = {});

struct RefineOptions
{
  std::size_t budget = 300;
  std::uint64_t seed = 7;
  double v_frac = 0.02;
  double y_frac = 0.3;
  LipoOptions lipo;
};

/// Narrow-box LIPO on eps_RMSE; returns the better of initial and refined, tagged
/// PBI+LIPO with metrics. Budget 0 returns `initial` unchanged.
EstimationResult refine(const EstimationResult& initial, const MeasuredCurve& curve,
                        const RefineOptions& options = {});

/// Standalone LIPO estimate over a prior box.
EstimationResult lipo_estimate(const MeasuredCurve& curve, const LogNormalPrior& prior, KernelFamily family,
                               Formulation formulation, std::size_t budget = 1000, std::uint64_t seed = 7,
                               const LipoOptions& options = {});

} // namespace rivest

#endif // RIVEST_GLOBAL_OPT_HPP
