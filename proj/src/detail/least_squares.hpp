// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// Bounded nonlinear least squares (Ceres, central differences) shared by the curve fits.

#ifndef RIVEST_DETAIL_LEAST_SQUARES_HPP
#define RIVEST_DETAIL_LEAST_SQUARES_HPP

#include <functional>
#include <string>
#include <vector>

namespace rivest::detail
{

/// Fills `residuals` for parameters `x`; returns false where the model is undefined.
using ResidualFn = std::function<bool(const double* x, double* residuals)>;

struct LsqProblem
{
  ResidualFn residual;
  int n_residuals = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  int max_iterations = 200;
};

struct LsqSolution
{
  std::vector<double> x;
  double norm = 0.0; ///< Euclidean norm of the residual vector at x
  bool converged = false;
  std::string message;
};

LsqSolution solve_least_squares(const LsqProblem& problem, std::vector<double> x0);

/// Runs every start and keeps the lowest residual norm (ties: earliest start).
LsqSolution multistart(const LsqProblem& problem, const std::vector<std::vector<double>>& starts);

/// Residual norm at x, +inf where the model fails.
double residual_norm(const LsqProblem& problem, const std::vector<double>& x);

} // namespace rivest::detail

#endif // RIVEST_DETAIL_LEAST_SQUARES_HPP
