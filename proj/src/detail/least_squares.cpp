// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "detail/least_squares.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <ceres/ceres.h>

#include "rivest/error.hpp"

namespace rivest::detail
{

namespace
{

struct Functor
{
  const LsqProblem* problem;

  bool operator()(double const* const* x, double* residuals) const
  {
    try
    {
      if (!problem->residual(x[0], residuals))
        return false;
    }
    catch (const Error&)
    {
      return false;
    }
    for (int i = 0; i < problem->n_residuals; ++i)
      if (!std::isfinite(residuals[i]))
        return false;
    return true;
  }
};

} // namespace

double residual_norm(const LsqProblem& problem, const std::vector<double>& x)
{
  std::vector<double> r(static_cast<std::size_t>(problem.n_residuals));
  const double* px = x.data();
  if (!Functor{&problem}(&px, r.data()))
    return std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double v : r)
    acc += v * v;
  return std::sqrt(acc);
}

LsqSolution solve_least_squares(const LsqProblem& problem, std::vector<double> x0)
{
  const int n = static_cast<int>(x0.size());
  if (problem.lower.size() != x0.size() || problem.upper.size() != x0.size() || problem.n_residuals < 1)
    throw PreconditionError("least-squares problem has inconsistent dimensions");
  for (int i = 0; i < n; ++i)
    x0[i] = std::clamp(x0[i], problem.lower[i], problem.upper[i]);

  LsqSolution out;
  out.x = x0;
  const double start_norm = residual_norm(problem, x0);
  if (!std::isfinite(start_norm))
  {
    out.norm = start_norm;
    out.message = "model undefined at the start point";
    return out;
  }

  auto* cost = new ceres::DynamicNumericDiffCostFunction<Functor, ceres::CENTRAL>(new Functor{&problem});
  cost->AddParameterBlock(n);
  cost->SetNumResiduals(problem.n_residuals);

  ceres::Problem lsq;
  lsq.AddResidualBlock(cost, nullptr, out.x.data());
  for (int i = 0; i < n; ++i)
  {
    lsq.SetParameterLowerBound(out.x.data(), i, problem.lower[i]);
    lsq.SetParameterUpperBound(out.x.data(), i, problem.upper[i]);
  }

  ceres::Solver::Options options;
  options.max_num_iterations = problem.max_iterations;
  options.function_tolerance = 1e-14;
  options.gradient_tolerance = 1e-16;
  options.parameter_tolerance = 1e-12;
  options.logging_type = ceres::SILENT;
  options.minimizer_progress_to_stdout = false;
  options.num_threads = 1;
  ceres::Solver::Summary summary;
  ceres::Solve(options, &lsq, &summary);

  out.norm = residual_norm(problem, out.x);
  out.converged = summary.termination_type == ceres::CONVERGENCE;
  out.message = summary.message;
  if (!(out.norm <= start_norm))
  {
    out.x = x0;
    out.norm = start_norm;
  }
  return out;
}

LsqSolution multistart(const LsqProblem& problem, const std::vector<std::vector<double>>& starts)
{
  if (starts.empty())
    throw PreconditionError("multistart needs at least one start");
  LsqSolution best;
  best.norm = std::numeric_limits<double>::infinity();
  for (const auto& s : starts)
  {
    auto sol = solve_least_squares(problem, s);
    if (sol.norm < best.norm)
      best = std::move(sol);
  }
  if (!std::isfinite(best.norm))
  {
    best.x = starts.front();
    best.message = "model undefined at every start";
  }
  return best;
}

} // namespace rivest::detail
