// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_NUMERIC_HPP
#define RIVEST_NUMERIC_HPP

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rivest
{

/// Row-major dense matrix; one curve or sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Trapezoid integral of samples on an arbitrary increasing abscissa.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Trapezoid integral of uniformly spaced samples.
double trapezoid_uniform(std::span<const double> y, double step);

/// Trapezoid quadrature weights for a uniform grid of `count` points.
std::vector<double> trapezoid_weights(std::size_t count, double step);

/// Linear interpolation of uniformly spaced samples starting at 0.
/// Outside [0, (n-1)*step] the value is `outside`.
double interp_uniform(std::span<const double> y, double step, double t, double outside = 0.0);

/// Linear interpolation on an increasing abscissa; zero outside the support.
double interp(std::span<const double> x, std::span<const double> y, double t);

/// `count` log-spaced values from `lo` to `hi` inclusive.
std::vector<double> logspace(double lo, double hi, std::size_t count);

/// sign(x) * |x|^(1/k)
double signed_root(double x, int k);

} // namespace rivest

#endif // RIVEST_NUMERIC_HPP
