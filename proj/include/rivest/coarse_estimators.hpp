// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// Forward-solver-free estimators: Laplace-domain fitting, temporal-moment matching
// and exchange-free (ADE) fits.

#ifndef RIVEST_COARSE_ESTIMATORS_HPP
#define RIVEST_COARSE_ESTIMATORS_HPP

#include <optional>
#include <span>
#include <vector>

#include "rivest/estimation_result.hpp"
#include "rivest/measured_curve.hpp"

namespace rivest
{

/// Temporal moments in seconds: m0 = integral of c, m1 the mean arrival time,
/// m2..m4 central moments.
struct MomentSet
{
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

/// f*(s) = ln(C*(s) / C*(0)) at positive abscissas s (1/s).
struct LaplaceSignature
{
  std::vector<double> s;
  std::vector<double> f;
};

/// Trapezoid quadrature of c(t) exp(-s t) over the record.
double numeric_laplace(const MeasuredCurve& curve, double s);

/// `count` log-spaced abscissas in [lo, hi] / t_peak.
std::vector<double> default_laplace_abscissas(double t_peak, std::size_t count = 20, double lo = 0.1,
                                              double hi = 20.0);

LaplaceSignature laplace_signature(const MeasuredCurve& curve, std::span<const double> abscissas);

/// ln(C(1, s_hat) / C(1, 0)) of the model at real s_hat > 0.
double model_laplace_log(const DimensionlessParams& params, Formulation formulation, double s_hat);

struct CoarseFitOptions
{
  int starts = 5;
  int max_iterations = 200;
  /// Start centre for the exchange parameters (Pe and the two kernel parameters);
  /// neutral defaults when empty.
  std::optional<DimensionlessParams> centre;
};

/// Least squares of f(s L / v, y) against f*(s) in log-parameter space.
EstimationResult laplace_fit(const MeasuredCurve& curve, KernelFamily family, Formulation formulation,
                             std::span<const double> abscissas = {}, const CoarseFitOptions& options = {});

MomentSet measured_moments(const MeasuredCurve& curve);

/// Model moments for a unit release, from a series expansion of ln C(1, s_hat) to
/// fourth order (cumulants). FirstOrder only.
MomentSet analytical_moments(double velocity, const DimensionlessParams& params, double length,
                             Formulation formulation);

/// Least squares of signed k-th roots of m1..m4 (model vs record). FirstOrder family.
EstimationResult moment_match(const MeasuredCurve& curve, Formulation formulation,
                              const CoarseFitOptions& options = {});

/// Two-parameter (v, Pe) least squares of the infinite-domain ADE against the
/// normalized record. Result has exchange = false.
EstimationResult ade_ls_fit(const MeasuredCurve& curve, int starts = 3);

/// Peak-time and peak-curvature match of the infinite-domain ADE. converged = false
/// (with a note) when the curvature gives no admissible (v, D).
EstimationResult ade_peak_fit(const MeasuredCurve& curve);

} // namespace rivest

#endif // RIVEST_COARSE_ESTIMATORS_HPP
