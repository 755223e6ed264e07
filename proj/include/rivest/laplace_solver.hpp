// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_LAPLACE_SOLVER_HPP
#define RIVEST_LAPLACE_SOLVER_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "rivest/memory_kernels.hpp"

namespace rivest
{

/// Domain and upstream boundary condition of the tracer-test problem.
enum class Formulation
{
  SemiInfNoUpstream = 1,    ///< [0, inf), Dirichlet pulse, no upstream dispersion
  SemiInfUpstream = 2,      ///< [0, inf), Robin pulse with upstream dispersion
  Infinite = 3,             ///< (-inf, inf), initial pulse at x = 0
  SemiInfEquivInfinite = 4, ///< [0, inf), boundary reproducing the infinite-domain solution
};

Formulation formulation_from_int(int tag);
int to_int(Formulation formulation);

/// Dimensionless transport parameters of the mobile-phase equation.
struct TransportParams
{
  double peclet = 100.0;
  double beta = 0.0; ///< immobile/mobile area ratio; 0 switches exchange off
  MemoryKernel kernel = FirstOrder{};
  double mass = 1.0; ///< dimensionless released mass
};

void validate(const TransportParams& params);

/// Uniform dimensionless time grid t_k = k * step, k = 0..count-1.
struct TimeGrid
{
  double step = 1.0 / 150.0;
  std::size_t count = 3601;

  double time(std::size_t k) const { return static_cast<double>(k) * step; }
  double last() const { return time(count - 1); }
  std::vector<double> times() const;

  /// Grid used for every synthetic dataset: step 1/150 on [0, 24].
  static TimeGrid canonical() { return {}; }
  static TimeGrid covering(double step, double t_max);

  bool operator==(const TimeGrid& other) const = default;
};

/// Settings of the windowed de Hoog inversion used by `breakthrough`.
struct InversionOptions
{
  int terms = 50;                ///< M; 2M+1 transform evaluations per window
  double tolerance = 1e-10;      ///< sets the abscissa shift -ln(tol)/(2 bigT)
  double window_ratio = 1.2;     ///< max t_max/t_min of the times sharing one window
  double period_factor = 1.25;   ///< bigT = period_factor * window t_max
  bool edge_shift = true;        ///< invert e^{s t0} C(s) with t0 at the advective leading edge
  double noise_floor = 1e-8;     ///< negatives above -noise_floor * peak are clamped to 0
};

/// B(s) of the Laplace-domain solution for each formulation.
Complex boundary_factor(Formulation formulation, const TransportParams& params, Complex s);

/// Laplace-domain concentration C(x, s). x < 0 is accepted for the infinite domain only.
Complex laplace_solution(const TransportParams& params, Formulation formulation, double x, Complex s);

/// Natural log of C(x, s) for x >= 0 (no overflow guard); used by the inversion and fitting code.
Complex log_laplace_solution(const TransportParams& params, Formulation formulation, double x, Complex s);

using LaplaceTransform = std::function<Complex(Complex)>;

/// de Hoog quotient-difference inversion of F at each time in `times` using the single
/// period `big_t` and abscissa `alpha_shift`, with 2M+1 evaluations at
/// s_k = alpha_shift + i pi k / big_t. Times must lie in [0, 2 big_t).
std::vector<double> invert_dehoog(const LaplaceTransform& transform, std::span<const double> times,
                                  double big_t, double alpha_shift, int terms);

/// Breakthrough curve c(x=1, t) at arbitrary non-negative times. The value at t = 0 is 0.
std::vector<double> breakthrough_at(const TransportParams& params, Formulation formulation,
                                    std::span<const double> times, const InversionOptions& options = {});

/// Breakthrough curve on a uniform grid.
std::vector<double> breakthrough(const TransportParams& params, Formulation formulation, const TimeGrid& grid,
                                 const InversionOptions& options = {});

/// Closed-form solution without exchange for formulations 1, 3 and 4 (0 for t <= 0).
double ade_analytical(double peclet, double mass, double x, double t, Formulation formulation);

} // namespace rivest

#endif // RIVEST_LAPLACE_SOLVER_HPP
