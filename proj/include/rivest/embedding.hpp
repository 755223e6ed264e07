// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_EMBEDDING_HPP
#define RIVEST_EMBEDDING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rivest/execution.hpp"
#include "rivest/kl_rom.hpp"
#include "rivest/measured_curve.hpp"
#include "rivest/numeric.hpp"

namespace rivest
{

/// Candidate velocities v_m = (lo + m * step) * L / t_peak, m = 0..count-1.
struct VelocityGrid
{
  double peak_velocity = 1.0;
  double lo = 0.9;
  double step = 0.005;
  std::size_t count = 121;

  static VelocityGrid for_curve(const MeasuredCurve& curve) { return {curve.peak_velocity()}; }
  double velocity(std::size_t m) const { return (lo + step * static_cast<double>(m)) * peak_velocity; }
  std::vector<double> velocities() const;
};

/// MAP coefficients as a function of the candidate velocity.
struct EmbeddedCurve
{
  std::vector<double> velocities;
  RowMatrix z;               ///< one row per velocity
  std::vector<bool> feasible; ///< false where no sample maps inside the KL grid
  double sigma_c = 0.0;
  double peak_velocity = 0.0; ///< L / t_peak of the embedded record

  std::size_t size() const { return velocities.size(); }
};

/// Appends zeros before the first and after the last sample at the largest original
/// spacing, covering [0, 24 t_peak], and recomputes the interval weights.
MeasuredCurve pad_with_zeros(const MeasuredCurve& curve);

/// Regularized linear least squares for Z at velocity v:
///   min_Z  sum_i (p_i - (mean + Z.phi)(t_i v/L) Delta_i / D)^2 / (N sigma_c^2) + Z^T diag(lambda)^-1 Z
/// with p_i the Delta-weighted, sum-normalized data and D = sum_j mean(t_j v/L) Delta_j.
Eigen::VectorXd embed(const MeasuredCurve& curve, const KLModel& kl, double v, double sigma_c);

/// Normal-equation pieces of the problem above: (M, r) with M Z = r.
struct EmbedSystem
{
  Eigen::MatrixXd lhs;
  Eigen::VectorXd rhs;
};
EmbedSystem embed_system(const MeasuredCurve& curve, const KLModel& kl, double v, double sigma_c);

EmbeddedCurve embed_over_velocities(const MeasuredCurve& curve, const KLModel& kl, const VelocityGrid& grid,
                                    double sigma_c, Execution execution = Execution::Parallel);

/// 25 log-spaced values in [1e-4, 1e1].
std::vector<double> default_sigma_candidates();

struct SigmaTuning
{
  double sigma_c = 0.0;
  std::vector<double> candidates;
  std::vector<double> scores; ///< geometric-mean validation error per candidate
};

/// 80/20 split of each curve's nonzero samples; Z fitted on the training part at
/// L/t_peak, scored by the L2 mismatch of normalized values at the held-out part.
SigmaTuning tune_sigma_c(std::span<const MeasuredCurve> curves, const KLModel& kl,
                         std::span<const double> candidates, std::uint64_t seed);

} // namespace rivest

#endif // RIVEST_EMBEDDING_HPP
