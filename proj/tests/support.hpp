// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures: representative priors standing in for coarse field estimates.

#ifndef RIVEST_TESTS_SUPPORT_HPP
#define RIVEST_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <utility>
#include <string>

#include <random>
#include <vector>

#include "rivest/kl_rom.hpp"
#include "rivest/measured_curve.hpp"
#include "rivest/numeric.hpp"
#include "rivest/synthetic_dataset.hpp"

namespace rivest::testing
{

inline LogNormalPrior reference_prior(KernelFamily family)
{
  LogNormalPrior p;
  if (family == KernelFamily::FirstOrder)
    p.mu_log = {std::log(200.0), std::log(0.5), std::log(4.0)};
  else
    p.mu_log = {std::log(200.0), std::log(0.3), std::log(0.3)};
  p.sigma_log = 0.25 * Eigen::Matrix3d::Identity();
  // exchange parameters co-vary, as in field fits
  p.sigma_log(1, 2) = p.sigma_log(2, 1) = 0.15;
  p.b = 2.0;
  return p;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / ("rivest_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Dataset and KL model on the canonical grid, built once per test binary.
struct Fixture
{
  SyntheticDataset dataset;
  KLModel kl;
  RowMatrix z; ///< KL coefficients of every dataset curve
};

inline const Fixture& fixture(KernelFamily family, std::size_t n = 300)
{
  static std::map<std::pair<int, std::size_t>, Fixture> cache;
  auto key = std::make_pair(static_cast<int>(family), n);
  auto it = cache.find(key);
  if (it == cache.end())
  {
    Fixture f;
    f.dataset = generate_dataset(reference_prior(family), n, Formulation::SemiInfEquivInfinite, family, 1234);
    f.kl = fit_kl(f.dataset, 20);
    f.z = project_all(f.kl, f.dataset.curves);
    it = cache.emplace(key, std::move(f)).first;
  }
  return it->second;
}

/// Sorted irregular sample times: `count` jittered points on [lo, hi] * (L / v).
inline std::vector<double> irregular_times(std::size_t count, double lo, double hi, double l_over_v,
                                           std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.4, 0.4);
  std::vector<double> t(count);
  // denser near the front, as in field campaigns
  for (std::size_t i = 0; i < count; ++i)
  {
    const double u = (static_cast<double>(i) + 0.5 + jitter(rng)) / static_cast<double>(count);
    t[i] = l_over_v * (lo + (hi - lo) * u * u);
  }
  return t;
}

/// Noise-free field-like record of the forward model for (y, v, L).
inline MeasuredCurve twin_curve(const DimensionlessParams& y, double v, double length, std::vector<double> times,
                                Formulation formulation = Formulation::SemiInfEquivInfinite)
{
  auto c = forward_dimensional(y, formulation, v, length, times);
  for (double& x : c)
    x = std::max(x, 0.0);
  return make_curve(std::move(times), std::move(c), length);
}

/// Temporal moments of the inverted curve c(1, t) by trapezoid quadrature on a 0.01 grid.
/// The window starts at [0, 200] and doubles until the zeroth moment reaches 0.999 of
/// `expected_mass`; samples after the curve first drops below 1e-12 of its peak are
/// left out, since inversion round-off weighted by t^4 would dominate there.
struct QuadratureMoments
{
  double m0 = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

inline QuadratureMoments inverted_moments(const DimensionlessParams& y, Formulation formulation,
                                          double expected_mass = 1.0)
{
  QuadratureMoments q;
  for (double t_max = 200.0; t_max <= 3200.0; t_max *= 2.0)
  {
    const auto grid = TimeGrid::covering(0.01, t_max);
    auto c = breakthrough(to_transport(y), formulation, grid);
    auto t = grid.times();
    const auto peak = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    std::size_t end = peak;
    while (end < c.size() && c[end] >= 1e-12 * c[peak])
      ++end;
    const bool decayed = end < c.size(); // curve fell to round-off inside the window
    c.resize(end);
    t.resize(end);
    std::vector<double> w(c.size());
    q.m0 = trapezoid(t, c);
    for (std::size_t i = 0; i < c.size(); ++i)
      w[i] = t[i] * c[i];
    q.m1 = trapezoid(t, w) / q.m0;
    double* central[3] = {&q.m2, &q.m3, &q.m4};
    for (int k = 2; k <= 4; ++k)
    {
      for (std::size_t i = 0; i < c.size(); ++i)
        w[i] = std::pow(t[i] - q.m1, k) * c[i];
      *central[k - 2] = trapezoid(t, w) / q.m0;
    }
    if (q.m0 >= 0.999 * expected_mass || decayed)
      break;
  }
  return q;
}

} // namespace rivest::testing

#endif // RIVEST_TESTS_SUPPORT_HPP
