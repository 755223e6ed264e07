// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/coarse_estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "detail/least_squares.hpp"
#include "rivest/error.hpp"
#include "rivest/numeric.hpp"

namespace rivest
{

namespace
{

// ---- truncated power series in s_hat ----------------------------------------------

constexpr int kOrder = 4;
using Series = std::array<double, kOrder + 1>;

Series mul(const Series& a, const Series& b)
{
  Series c{};
  for (int n = 0; n <= kOrder; ++n)
    for (int k = 0; k <= n; ++k)
      c[n] += a[k] * b[n - k];
  return c;
}

Series scale(Series a, double f)
{
  for (double& x : a)
    x *= f;
  return a;
}

// g(u) = sum_k g_k u^k for a series u with u_0 = 0.
Series compose(const std::array<double, kOrder + 1>& g, const Series& u)
{
  Series out{};
  Series power{};
  power[0] = 1.0;
  for (int k = 0; k <= kOrder; ++k)
  {
    for (int n = 0; n <= kOrder; ++n)
      out[n] += g[k] * power[n];
    power = mul(power, u);
  }
  return out;
}

// Relative part (w - w0) / w0 of a series with w0 > 0.
Series relative_part(const Series& w)
{
  Series u = scale(w, 1.0 / w[0]);
  u[0] = 0.0;
  return u;
}

Series sqrt_series(const Series& w)
{
  constexpr std::array<double, kOrder + 1> g{1.0, 0.5, -0.125, 0.0625, -0.0390625};
  return scale(compose(g, relative_part(w)), std::sqrt(w[0]));
}

Series log_series(const Series& w)
{
  constexpr std::array<double, kOrder + 1> g{0.0, 1.0, -0.5, 1.0 / 3.0, -0.25};
  auto out = compose(g, relative_part(w));
  out[0] += std::log(w[0]);
  return out;
}

// q(s) = s (1 + beta_kf / (k_r + s)).
Series storage_series(double beta_kf, double k_r)
{
  Series q{};
  q[1] = 1.0;
  if (beta_kf == 0.0)
    return q;
  if (k_r == 0.0)
  {
    q[0] = beta_kf;
    return q;
  }
  double term = beta_kf / k_r;
  for (int n = 1; n <= kOrder; ++n)
  {
    q[n] += term;
    term *= -1.0 / k_r;
  }
  return q;
}

// ---- fitting helpers ---------------------------------------------------------------

// Deterministic start offsets in log space: (ln v, ln Pe, ln y1, ln y2).
constexpr std::array<std::array<double, 4>, 5> kStartOffsets{{
    {0.0, 0.0, 0.0, 0.0},
    {-0.1, 0.7, 0.7, 0.7},
    {0.1, -0.7, -0.7, 0.7},
    {-0.1, -0.7, 0.7, -0.7},
    {0.1, 0.7, -0.7, -0.7},
}};

DimensionlessParams neutral_centre(KernelFamily family)
{
  DimensionlessParams p;
  p.family = family;
  p.y = family == KernelFamily::FirstOrder ? std::array<double, kParamDim>{100.0, 0.5, 1.0}
                                           : std::array<double, kParamDim>{100.0, 0.3, 0.3};
  return p;
}

struct Box
{
  std::vector<double> lower, upper;
};

Box log_box(KernelFamily family, double v_peak)
{
  Box b;
  b.lower = {std::log(0.2 * v_peak), std::log(1.0), std::log(1e-8), std::log(1e-8)};
  b.upper = {std::log(5.0 * v_peak), std::log(1e5), std::log(1e4), std::log(1e4)};
  if (family == KernelFamily::PowerLaw)
  {
    b.lower[3] = std::log(1e-6);
    b.upper[3] = std::log(0.999);
  }
  return b;
}

std::vector<std::vector<double>> starts_around(double v, const DimensionlessParams& centre, int count)
{
  if (count < 1 || count > static_cast<int>(kStartOffsets.size()))
    throw PreconditionError("coarse fits support 1 to 5 starts");
  const auto c = centre.log();
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i)
  {
    const auto& o = kStartOffsets[static_cast<std::size_t>(i)];
    out.push_back({std::log(v) + o[0], c[0] + o[1], c[1] + o[2], c[2] + o[3]});
  }
  return out;
}

DimensionlessParams params_at(KernelFamily family, const double* x)
{
  return DimensionlessParams::from_log(family, Eigen::Vector3d(x[1], x[2], x[3]));
}

EstimationResult fill_result(Method method, Formulation formulation, KernelFamily family,
                             const detail::LsqSolution& sol)
{
  EstimationResult r;
  r.method = method;
  r.formulation = formulation;
  r.velocity = std::exp(sol.x[0]);
  r.params = params_at(family, sol.x.data());
  r.residual = sol.norm;
  r.converged = sol.converged && std::isfinite(sol.norm);
  if (!r.converged)
    r.note = sol.message;
  return r;
}

double record_mass(const MeasuredCurve& curve)
{
  return trapezoid(curve.times, curve.concentrations);
}

// Full width at half maximum by linear interpolation of the crossings; 0 if absent.
double half_width(const MeasuredCurve& curve)
{
  const std::size_t p = curve.peak_index();
  const double half = 0.5 * curve.concentrations[p];
  const auto& t = curve.times;
  const auto& c = curve.concentrations;
  std::size_t i = p;
  while (i > 0 && c[i - 1] > half)
    --i;
  std::size_t j = p;
  while (j + 1 < c.size() && c[j + 1] > half)
    ++j;
  if (i == 0 || j + 1 == c.size())
    return 0.0;
  const double left = t[i - 1] + (half - c[i - 1]) * (t[i] - t[i - 1]) / (c[i] - c[i - 1]);
  const double right = t[j] + (c[j] - half) * (t[j + 1] - t[j]) / (c[j] - c[j + 1]);
  return right - left;
}

double ade_infinite(double peclet, double tau)
{
  return ade_analytical(peclet, 1.0, 1.0, tau, Formulation::Infinite);
}

} // namespace

double numeric_laplace(const MeasuredCurve& curve, double s)
{
  if (!(s >= 0.0))
    throw PreconditionError("Laplace abscissa must be >= 0");
  std::vector<double> y(curve.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = curve.concentrations[i] * std::exp(-s * curve.times[i]);
  return trapezoid(curve.times, y);
}

std::vector<double> default_laplace_abscissas(double t_peak, std::size_t count, double lo, double hi)
{
  if (!(t_peak > 0.0))
    throw PreconditionError("Laplace abscissas need t_peak > 0");
  auto s = logspace(lo, hi, count);
  for (double& x : s)
    x /= t_peak;
  return s;
}

LaplaceSignature laplace_signature(const MeasuredCurve& curve, std::span<const double> abscissas)
{
  const double c0 = numeric_laplace(curve, 0.0);
  if (!(c0 > 0.0))
    throw PreconditionError("Laplace signature: zero mass");
  LaplaceSignature sig;
  for (double s : abscissas)
  {
    if (!(s > 0.0))
      throw PreconditionError("Laplace abscissas must be positive");
    const double c = numeric_laplace(curve, s);
    if (!(c > 0.0))
      throw NumericalError("Laplace signature underflows at s = " + std::to_string(s));
    sig.s.push_back(s);
    sig.f.push_back(std::log(c / c0));
  }
  return sig;
}

double model_laplace_log(const DimensionlessParams& params, Formulation formulation, double s_hat)
{
  return log_laplace_solution(to_transport(params, 1.0), formulation, 1.0, Complex(s_hat, 0.0)).real();
}

EstimationResult laplace_fit(const MeasuredCurve& curve, KernelFamily family, Formulation formulation,
                             std::span<const double> abscissas, const CoarseFitOptions& options)
{
  require_estimable(curve);
  const auto s = abscissas.empty() ? default_laplace_abscissas(curve.t_peak()) : std::vector<double>(
                                                                                    abscissas.begin(), abscissas.end());
  const auto sig = laplace_signature(curve, s);
  const double length = curve.length;

  const auto box = log_box(family, curve.peak_velocity());
  detail::LsqProblem problem;
  problem.n_residuals = static_cast<int>(sig.s.size());
  problem.lower = box.lower;
  problem.upper = box.upper;
  problem.max_iterations = options.max_iterations;
  problem.residual = [&](const double* x, double* r) {
    const double v = std::exp(x[0]);
    const auto y = params_at(family, x);
    for (std::size_t p = 0; p < sig.s.size(); ++p)
      r[p] = model_laplace_log(y, formulation, sig.s[p] * length / v) - sig.f[p];
    return true;
  };
  const auto centre = options.centre.value_or(neutral_centre(family));
  if (centre.family != family)
    throw PreconditionError("laplace_fit: start centre has the wrong family");
  const auto sol = detail::multistart(problem, starts_around(curve.peak_velocity(), centre, options.starts));
  return fill_result(Method::LaplaceFit, formulation, family, sol);
}

MomentSet measured_moments(const MeasuredCurve& curve)
{
  const double m0 = record_mass(curve);
  if (!(m0 > 0.0))
    throw PreconditionError("moments: zero mass");
  const auto& t = curve.times;
  std::vector<double> y(curve.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = t[i] * curve.concentrations[i];
  MomentSet m;
  m.m0 = m0;
  m.m1 = trapezoid(t, y) / m0;
  std::array<double*, 3> central{&m.m2, &m.m3, &m.m4};
  for (int k = 2; k <= 4; ++k)
  {
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = std::pow(t[i] - m.m1, k) * curve.concentrations[i];
    *central[static_cast<std::size_t>(k - 2)] = trapezoid(t, y) / m0;
  }
  return m;
}

MomentSet analytical_moments(double velocity, const DimensionlessParams& params, double length,
                             Formulation formulation)
{
  if (params.family != KernelFamily::FirstOrder)
    throw PreconditionError("temporal moments are undefined for the power-law kernel");
  validate(to_transport(params)); // exchange-free parameters (zeros) are allowed here
  if (!(velocity > 0.0) || !(length > 0.0))
    throw PreconditionError("moments need velocity > 0 and length > 0");
  const double pe = params.y[0];

  // ln C(1, s) = ln B(s) + (Pe / 2)(1 - sqrt(1 + 4 q(s) / Pe))
  const Series q = storage_series(params.y[1], params.y[2]);
  Series w = scale(q, 4.0 / pe);
  w[0] += 1.0;
  const Series root = sqrt_series(w);
  Series log_c = scale(root, -0.5 * pe);
  log_c[0] += 0.5 * pe;
  switch (formulation)
  {
  case Formulation::SemiInfNoUpstream:
    break;
  case Formulation::SemiInfUpstream:
  {
    Series half = scale(root, 0.5);
    half[0] += 0.5;
    const Series lb = log_series(half);
    for (int n = 0; n <= kOrder; ++n)
      log_c[n] -= lb[n];
    break;
  }
  case Formulation::Infinite:
  case Formulation::SemiInfEquivInfinite:
  {
    const Series lw = log_series(w);
    for (int n = 0; n <= kOrder; ++n)
      log_c[n] -= 0.5 * lw[n];
    break;
  }
  }

  // cumulant kappa_n = (-1)^n n! [s^n] ln C, in units of (L / v)^n
  const double time_scale = length / velocity;
  std::array<double, kOrder + 1> kappa{};
  double factorial = 1.0, sign = 1.0, unit = 1.0;
  for (int n = 1; n <= kOrder; ++n)
  {
    factorial *= n;
    sign = -sign;
    unit *= time_scale;
    kappa[static_cast<std::size_t>(n)] = sign * factorial * log_c[static_cast<std::size_t>(n)] * unit;
  }
  MomentSet m;
  m.m0 = time_scale * std::exp(log_c[0]);
  m.m1 = kappa[1];
  m.m2 = kappa[2];
  m.m3 = kappa[3];
  m.m4 = kappa[4] + 3.0 * kappa[2] * kappa[2];
  return m;
}

EstimationResult moment_match(const MeasuredCurve& curve, Formulation formulation, const CoarseFitOptions& options)
{
  require_estimable(curve);
  const auto meas = measured_moments(curve);
  const std::array<double, 4> target{meas.m1, signed_root(meas.m2, 2), signed_root(meas.m3, 3),
                                     signed_root(meas.m4, 4)};
  const double length = curve.length;
  const auto family = KernelFamily::FirstOrder;
  const auto box = log_box(family, curve.peak_velocity());
  detail::LsqProblem problem;
  problem.n_residuals = 4;
  problem.lower = box.lower;
  problem.upper = box.upper;
  problem.max_iterations = options.max_iterations;
  problem.residual = [&](const double* x, double* r) {
    const auto m = analytical_moments(std::exp(x[0]), params_at(family, x), length, formulation);
    r[0] = m.m1 - target[0];
    r[1] = signed_root(m.m2, 2) - target[1];
    r[2] = signed_root(m.m3, 3) - target[2];
    r[3] = signed_root(m.m4, 4) - target[3];
    return true;
  };
  const auto centre = options.centre.value_or(neutral_centre(family));
  if (centre.family != family)
    throw PreconditionError("moment_match: start centre must be first-order");
  const auto sol = detail::multistart(problem, starts_around(curve.peak_velocity(), centre, options.starts));
  return fill_result(Method::Moments, formulation, family, sol);
}

EstimationResult ade_ls_fit(const MeasuredCurve& curve, int starts)
{
  require_estimable(curve);
  if (starts < 1 || starts > 3)
    throw PreconditionError("ade_ls_fit supports 1 to 3 starts");
  const std::size_t n = curve.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += curve.concentrations[i] * curve.weights[i];
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i)
    p[i] = curve.concentrations[i] * curve.weights[i] / sum;

  const double v_peak = curve.peak_velocity();
  const double t_peak = curve.t_peak();
  double pe0 = 100.0;
  if (const double w = half_width(curve); w > 0.0)
  {
    const double sigma_tau = w / (2.0 * std::sqrt(2.0 * std::numbers::ln2)) / t_peak;
    pe0 = std::clamp(2.0 / (sigma_tau * sigma_tau), 1.0, 1e6);
  }

  const double length = curve.length;
  detail::LsqProblem problem;
  problem.n_residuals = static_cast<int>(n);
  problem.lower = {std::log(0.2 * v_peak), std::log(0.1)};
  problem.upper = {std::log(5.0 * v_peak), std::log(1e7)};
  problem.residual = [&](const double* x, double* r) {
    const double v = std::exp(x[0]);
    const double pe = std::exp(x[1]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
      r[i] = ade_infinite(pe, curve.times[i] * v / length) * curve.weights[i];
      total += r[i];
    }
    if (!(total > 0.0))
      return false;
    for (std::size_t i = 0; i < n; ++i)
      r[i] = r[i] / total - p[i];
    return true;
  };
  std::vector<std::vector<double>> seeds;
  for (double f : {1.0, 0.3, 3.0})
    seeds.push_back({std::log(v_peak), std::log(pe0 * f)});
  seeds.resize(static_cast<std::size_t>(starts));
  const auto sol = detail::multistart(problem, seeds);

  EstimationResult r;
  r.method = Method::AdeLS;
  r.formulation = Formulation::Infinite;
  r.exchange = false;
  r.velocity = std::exp(sol.x[0]);
  r.params.family = KernelFamily::FirstOrder;
  r.params.y = {std::exp(sol.x[1]), 0.0, 0.0};
  r.residual = sol.norm;
  r.converged = sol.converged && std::isfinite(sol.norm);
  if (!r.converged)
    r.note = sol.message;
  return r;
}

EstimationResult ade_peak_fit(const MeasuredCurve& curve)
{
  require_estimable(curve);
  const auto& t = curve.times;
  const auto& c = curve.concentrations;
  // centre of a plateau of equal maxima
  std::size_t first = curve.peak_index();
  std::size_t last = first;
  while (last + 1 < c.size() && c[last + 1] == c[first])
    ++last;
  const std::size_t p = (first + last) / 2;

  EstimationResult r;
  r.method = Method::AdePeak;
  r.formulation = Formulation::Infinite;
  r.exchange = false;
  r.params.family = KernelFamily::FirstOrder;
  r.converged = false;
  r.velocity = curve.peak_velocity();
  r.params.y = {std::numeric_limits<double>::infinity(), 0.0, 0.0};
  if (p == 0 || p + 1 >= c.size())
  {
    r.note = "peak on the record boundary";
    return r;
  }

  const double hm = t[p] - t[p - 1];
  const double hp = t[p + 1] - t[p];
  const double second = 2.0 * ((c[p + 1] - c[p]) / hp - (c[p] - c[p - 1]) / hm) / (hm + hp);
  const double ratio = second / c[p];
  const double tp = t[p];
  const double length = curve.length;
  // at the peak of c = A t^-1/2 exp(-(L - v t)^2 / (4 D t)): c''/c = 1/(2 t^2) - L^2/(2 D t^3)
  const double denom = tp * (1.0 - 2.0 * ratio * tp * tp);
  if (!(ratio < 0.0) || !(denom > 0.0))
  {
    r.note = "peak curvature is not negative";
    return r;
  }
  const double d = length * length / denom;
  const double radicand = length * length - 2.0 * tp * d;
  if (!(radicand > 0.0))
  {
    r.note = "peak curvature too weak: no admissible velocity";
    return r;
  }
  r.velocity = std::sqrt(radicand) / tp;
  r.params.y[0] = r.velocity * length / d;
  r.converged = true;
  return r;
}

} // namespace rivest
