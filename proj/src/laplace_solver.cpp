// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/laplace_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

constexpr double kExpFloor = -700.0;

// Leading-edge time before which c(1, t) < exp(-750) for every kernel: exchange only
// delays mass, so the exchange-free front bounds the arrival.
double leading_edge(double peclet)
{
  return std::max(0.0, 1.0 - std::sqrt(3000.0 / peclet));
}

Complex storage_term(const TransportParams& p, Complex s)
{
  if (p.beta == 0.0)
    return s;
  return s + p.beta * s * kernel_laplace(p.kernel, s);
}

struct SolutionParts
{
  Complex log_b;
  Complex exponent;
};

SolutionParts solution_parts(const TransportParams& p, Formulation f, double x, Complex s)
{
  const double pe = p.peclet;
  const Complex q = storage_term(p, s);
  const Complex sqrt_w = std::sqrt(4.0 * q + pe);
  const double sqrt_pe = std::sqrt(pe);
  const Complex root = sqrt_pe * sqrt_w;

  SolutionParts out;
  switch (f)
  {
  case Formulation::SemiInfNoUpstream:
    out.log_b = 0.0;
    break;
  case Formulation::SemiInfUpstream:
    out.log_b = -std::log(0.5 + sqrt_w / (2.0 * sqrt_pe));
    break;
  case Formulation::Infinite:
  case Formulation::SemiInfEquivInfinite:
    out.log_b = 0.5 * std::log(pe) - std::log(sqrt_w);
    break;
  }
  if (x >= 0.0)
    // Pe - sqrt(Pe(4q + Pe)) rewritten without cancellation for large Pe.
    out.exponent = 0.5 * x * (-4.0 * pe * q) / (pe + root);
  else
    out.exponent = 0.5 * x * (pe + root);
  return out;
}

} // namespace

Formulation formulation_from_int(int tag)
{
  if (tag < 1 || tag > 4)
    throw PreconditionError("formulation must be 1, 2, 3 or 4 (got " + std::to_string(tag) + ")");
  return static_cast<Formulation>(tag);
}

int to_int(Formulation formulation)
{
  return static_cast<int>(formulation);
}

void validate(const TransportParams& params)
{
  if (!(params.peclet > 0.0) || !std::isfinite(params.peclet))
    throw PreconditionError("Peclet number must be finite and > 0");
  if (!(params.beta >= 0.0) || !std::isfinite(params.beta))
    throw PreconditionError("beta must be finite and >= 0");
  if (!(params.mass > 0.0))
    throw PreconditionError("released mass must be > 0");
  validate(params.kernel);
}

std::vector<double> TimeGrid::times() const
{
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k)
    t[k] = time(k);
  return t;
}

TimeGrid TimeGrid::covering(double step, double t_max)
{
  if (!(step > 0.0) || !(t_max > 0.0))
    throw PreconditionError("time grid needs step > 0 and t_max > 0");
  return {step, static_cast<std::size_t>(std::llround(t_max / step)) + 1};
}

Complex boundary_factor(Formulation formulation, const TransportParams& params, Complex s)
{
  return std::exp(solution_parts(params, formulation, 0.0, s).log_b);
}

Complex log_laplace_solution(const TransportParams& params, Formulation formulation, double x, Complex s)
{
  const auto parts = solution_parts(params, formulation, x, s);
  return std::log(params.mass) + parts.log_b + parts.exponent;
}

Complex laplace_solution(const TransportParams& params, Formulation formulation, double x, Complex s)
{
  if (x < 0.0 && formulation != Formulation::Infinite)
    throw PreconditionError("x < 0 is only defined for the infinite-domain formulation");
  const auto parts = solution_parts(params, formulation, x, s);
  if (parts.exponent.real() < kExpFloor)
    return 0.0;
  return params.mass * std::exp(parts.log_b + parts.exponent);
}

std::vector<double> invert_dehoog(const LaplaceTransform& transform, std::span<const double> times,
                                  double big_t, double alpha_shift, int terms)
{
  if (terms < 1)
    throw PreconditionError("de Hoog inversion needs at least one term");
  if (!(big_t > 0.0))
    throw PreconditionError("de Hoog inversion needs a positive period");

  const int m_terms = terms;
  const int n_eval = 2 * m_terms + 1;
  std::vector<Complex> a(n_eval);
  for (int k = 0; k < n_eval; ++k)
  {
    const Complex s(alpha_shift, std::numbers::pi * k / big_t);
    a[k] = transform(s);
    if (!std::isfinite(a[k].real()) || !std::isfinite(a[k].imag()))
    {
      std::ostringstream msg;
      msg << "non-finite Laplace transform value at s_" << k << " = " << s.real() << (s.imag() < 0 ? "-" : "+")
          << std::abs(s.imag()) << "i";
      throw NumericalError(msg.str());
    }
  }

  std::vector<double> out(times.size(), 0.0);
  // An underflowed transform means |f| is below exp(-700) across the whole window.
  if (a[0] == Complex(0.0))
    return out;
  int m = m_terms;
  for (int k = 1; k < n_eval; ++k)
    if (a[k] == Complex(0.0))
    {
      m = std::min(m, (k - 1) / 2);
      break;
    }
  if (m < 1)
    return out;

  a[0] *= 0.5;
  const int rows = 2 * m + 1;
  const int cols = m + 1;
  std::vector<Complex> e(static_cast<std::size_t>(rows) * cols, 0.0);
  std::vector<Complex> q(static_cast<std::size_t>(2 * m) * cols, 0.0);
  auto E = [&](int i, int j) -> Complex& { return e[static_cast<std::size_t>(i) * cols + j]; };
  auto Q = [&](int i, int j) -> Complex& { return q[static_cast<std::size_t>(i) * cols + j]; };

  for (int i = 0; i < 2 * m; ++i)
    Q(i, 1) = a[i + 1] / a[i];
  for (int r = 1; r <= m; ++r)
  {
    const int n = 2 * (m - r) + 1;
    for (int i = 0; i < n; ++i)
      E(i, r) = Q(i + 1, r) - Q(i, r) + E(i + 1, r - 1);
    if (r < m)
    {
      const int rq = r + 1;
      const int len = 2 * (m - rq) + 2;
      for (int i = 0; i < len; ++i)
        Q(i, rq) = Q(i + 1, rq - 1) * E(i + 1, rq - 1) / E(i, rq - 1);
    }
  }

  std::vector<Complex> d(rows);
  d[0] = a[0];
  for (int j = 1; j <= m; ++j)
  {
    d[2 * j - 1] = -Q(0, j);
    d[2 * j] = -E(0, j);
  }

  std::vector<Complex> A(2 * m + 2), B(2 * m + 2);
  for (std::size_t it = 0; it < times.size(); ++it)
  {
    const double t = times[it];
    const Complex z = std::exp(Complex(0.0, std::numbers::pi * t / big_t));
    A[0] = 0.0;
    A[1] = d[0];
    B[0] = 1.0;
    B[1] = 1.0;
    for (int n = 2; n <= 2 * m; ++n)
    {
      A[n] = A[n - 1] + d[n - 1] * z * A[n - 2];
      B[n] = B[n - 1] + d[n - 1] * z * B[n - 2];
    }
    const Complex h2m = 0.5 * (1.0 + (d[2 * m - 1] - d[2 * m]) * z);
    const Complex r2m = -h2m * (1.0 - std::sqrt(1.0 + d[2 * m] * z / (h2m * h2m)));
    A[2 * m + 1] = A[2 * m] + r2m * A[2 * m - 1];
    B[2 * m + 1] = B[2 * m] + r2m * B[2 * m - 1];
    const double value = (std::exp(alpha_shift * t) / big_t * A[2 * m + 1] / B[2 * m + 1]).real();
    out[it] = std::isfinite(value) ? value : 0.0;
  }
  return out;
}

std::vector<double> breakthrough_at(const TransportParams& params, Formulation formulation,
                                    std::span<const double> times, const InversionOptions& options)
{
  validate(params);
  std::vector<double> out(times.size(), 0.0);
  if (times.empty())
    return out;

  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!std::is_sorted(times.begin(), times.end()))
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return times[i] < times[j]; });

  const double t0 = options.edge_shift ? leading_edge(params.peclet) : 0.0;
  const LaplaceTransform shifted = [&](Complex s) -> Complex {
    const Complex lg = log_laplace_solution(params, formulation, 1.0, s) + s * t0;
    if (lg.real() < kExpFloor)
      return 0.0;
    return std::exp(lg);
  };

  std::size_t i = 0;
  while (i < order.size() && times[order[i]] - t0 <= 0.0)
    ++i;
  std::vector<double> window;
  while (i < order.size())
  {
    const double tau_start = times[order[i]] - t0;
    std::size_t j = i;
    window.clear();
    while (j < order.size() && times[order[j]] - t0 <= tau_start * options.window_ratio)
    {
      window.push_back(times[order[j]] - t0);
      ++j;
    }
    const double big_t = options.period_factor * window.back();
    const double shift = -std::log(options.tolerance) / (2.0 * big_t);
    const auto values = invert_dehoog(shifted, window, big_t, shift, options.terms);
    for (std::size_t k = 0; k < values.size(); ++k)
      out[order[i + k]] = values[k];
    i = j;
  }

  double peak = 0.0;
  for (double v : out)
    peak = std::max(peak, v);
  for (double& v : out)
    if (v < 0.0 && v > -options.noise_floor * peak)
      v = 0.0;
  return out;
}

std::vector<double> breakthrough(const TransportParams& params, Formulation formulation, const TimeGrid& grid,
                                 const InversionOptions& options)
{
  const auto t = grid.times();
  return breakthrough_at(params, formulation, t, options);
}

double ade_analytical(double peclet, double mass, double x, double t, Formulation formulation)
{
  if (formulation == Formulation::SemiInfUpstream)
    throw PreconditionError("no closed-form exchange-free solution for formulation 2");
  if (t <= 0.0)
    return 0.0;
  const double gauss = std::exp(-(x - t) * (x - t) / (4.0 * t / peclet));
  if (formulation == Formulation::SemiInfNoUpstream)
    return mass * x / std::sqrt(4.0 * std::numbers::pi * t * t * t / peclet) * gauss;
  return mass / std::sqrt(4.0 * std::numbers::pi * t / peclet) * gauss;
}

} // namespace rivest
