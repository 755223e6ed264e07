// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "rivest/error.hpp"

namespace rivest
{

double trapezoid(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size())
    throw PreconditionError("trapezoid: abscissa and ordinate sizes differ");
  double sum = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    sum += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return sum;
}

double trapezoid_uniform(std::span<const double> y, double step)
{
  if (y.size() < 2)
    return 0.0;
  double sum = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i)
    sum += y[i];
  return sum * step;
}

std::vector<double> trapezoid_weights(std::size_t count, double step)
{
  std::vector<double> w(count, step);
  if (count > 0)
  {
    w.front() = 0.5 * step;
    w.back() = 0.5 * step;
  }
  if (count == 1)
    w.front() = 0.0;
  return w;
}

double interp_uniform(std::span<const double> y, double step, double t, double outside)
{
  if (y.empty() || t < 0.0)
    return outside;
  const double pos = t / step;
  const auto last = static_cast<double>(y.size() - 1);
  if (pos > last)
    return outside;
  auto i = static_cast<std::size_t>(pos);
  if (i >= y.size() - 1)
    return y.back();
  const double frac = pos - static_cast<double>(i);
  return y[i] + frac * (y[i + 1] - y[i]);
}

double interp(std::span<const double> x, std::span<const double> y, double t)
{
  if (x.empty() || t < x.front() || t > x.back())
    return 0.0;
  auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.end())
    return y.back();
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double frac = (t - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] + frac * (y[i] - y[i - 1]);
}

std::vector<double> logspace(double lo, double hi, std::size_t count)
{
  std::vector<double> out(count);
  if (count == 1)
  {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

double signed_root(double x, int k)
{
  if (x == 0.0)
    return 0.0;
  return std::copysign(std::pow(std::abs(x), 1.0 / k), x);
}

} // namespace rivest
