// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "rivest/coarse_estimators.hpp"
#include "rivest/error.hpp"
#include "rivest/numeric.hpp"
#include "rivest/pbi_estimator.hpp"
#include "support.hpp"

using namespace rivest;

namespace
{

constexpr double kLength = 500.0;
constexpr double kVelocity = 0.4;

std::vector<double> dense_times(std::size_t count, double tau_max)
{
  std::vector<double> t;
  for (std::size_t i = 1; i <= count; ++i)
    t.push_back(kLength / kVelocity * tau_max * static_cast<double>(i) / static_cast<double>(count));
  return t;
}

/// Exchange-free record from the closed form (exact data).
MeasuredCurve ade_record(double peclet, std::size_t count = 3000, double tau_max = 12.0)
{
  auto t = dense_times(count, tau_max);
  std::vector<double> c;
  for (double x : t)
    c.push_back(ade_analytical(peclet, 1.0, 1.0, x * kVelocity / kLength, Formulation::Infinite));
  return make_curve(std::move(t), std::move(c), kLength);
}

DimensionlessParams first_order(double pe, double beta_kf, double k_r)
{
  DimensionlessParams p;
  p.y = {pe, beta_kf, k_r};
  return p;
}

MeasuredCurve scaled(MeasuredCurve c, double f)
{
  for (double& x : c.concentrations)
    x *= f;
  return c;
}

void check_close(const EstimationResult& r, double v, const DimensionlessParams& y, double tol, int params = 3)
{
  CHECK(std::abs(r.velocity / v - 1.0) < tol);
  for (int k = 0; k < params; ++k)
    CHECK(std::abs(r.params.y[k] / y.y[k] - 1.0) < tol);
}

} // namespace

TEST_CASE("numeric Laplace transform")
{
  std::vector<double> t, c;
  for (int i = 0; i <= 30000; ++i)
  {
    t.push_back(i * 1e-3);
    c.push_back(std::exp(-t.back()));
  }
  const auto curve = make_curve(t, c, 1.0);
  CHECK(numeric_laplace(curve, 0.0) == doctest::Approx(trapezoid(t, c)).epsilon(1e-15));
  CHECK(std::abs(numeric_laplace(curve, 1.0) - 0.5) < 1e-3);
  double prev = numeric_laplace(curve, 0.0);
  for (double s : {0.5, 2.0, 10.0, 100.0, 1e4})
  {
    const double v = numeric_laplace(curve, s);
    CHECK(v < prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK(prev < 1e-3);
  CHECK_THROWS_AS(numeric_laplace(curve, -1.0), PreconditionError);

  const auto s = default_laplace_abscissas(50.0);
  REQUIRE(s.size() == 20);
  CHECK(s.front() == doctest::Approx(0.1 / 50.0));
  CHECK(s.back() == doctest::Approx(20.0 / 50.0));
}

TEST_CASE("model Laplace signature is zero at the origin and decreasing")
{
  const auto y = first_order(200, 0.5, 4);
  CHECK(std::abs(model_laplace_log(y, Formulation::SemiInfUpstream, 1e-12)) < 1e-10);
  CHECK(model_laplace_log(y, Formulation::SemiInfEquivInfinite, 1.0) <
        model_laplace_log(y, Formulation::SemiInfEquivInfinite, 0.5));
}

TEST_CASE("laplace_fit recovers first-order parameters from a dense record")
{
  const auto y = first_order(200, 0.5, 4);
  const auto c = testing::twin_curve(y, kVelocity, kLength, dense_times(3000, 12.0));
  const auto r = laplace_fit(c, KernelFamily::FirstOrder, Formulation::SemiInfEquivInfinite);
  CHECK(r.method == Method::LaplaceFit);
  CHECK(r.converged);
  check_close(r, kVelocity, y, 0.01);

  // residual at the result is no larger than with any subset of the starts
  for (int k = 1; k <= 5; ++k)
  {
    CoarseFitOptions o;
    o.starts = k;
    CHECK(r.residual <= laplace_fit(c, KernelFamily::FirstOrder, Formulation::SemiInfEquivInfinite, {}, o).residual +
                            1e-15);
  }

  const auto s5 = laplace_fit(scaled(c, 5.0), KernelFamily::FirstOrder, Formulation::SemiInfEquivInfinite);
  CHECK(s5.velocity == doctest::Approx(r.velocity).epsilon(1e-6));
  for (int k = 0; k < 3; ++k)
    CHECK(s5.params.y[k] == doctest::Approx(r.params.y[k]).epsilon(1e-5));
}

TEST_CASE("laplace_fit on an exchange-free record sends the exchange rate to its bound")
{
  for (double pe : {100.0, 1000.0})
  {
    const auto r = laplace_fit(ade_record(pe), KernelFamily::FirstOrder, Formulation::Infinite);
    CHECK(std::abs(r.velocity / kVelocity - 1.0) < 0.01);
    CHECK(std::abs(r.params.y[0] / pe - 1.0) < 0.01);
    CHECK(r.params.y[1] < 1e-4);
  }
}

TEST_CASE("laplace_fit input checks")
{
  const auto zero = make_curve({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}, kLength);
  CHECK_THROWS_AS(laplace_fit(zero, KernelFamily::FirstOrder, Formulation::Infinite), PreconditionError);
  CHECK_THROWS_AS(make_curve({1, 2, 2, 4}, {0, 1, 1, 0}, kLength), PreconditionError);
  const auto c = ade_record(100.0, 200);
  CoarseFitOptions bad;
  bad.starts = 6;
  CHECK_THROWS_AS(laplace_fit(c, KernelFamily::FirstOrder, Formulation::Infinite, {}, bad), PreconditionError);
}

TEST_CASE("measured moments")
{
  // symmetric triangle centred at t0 = 10
  std::vector<double> t, c;
  for (int i = 0; i <= 200; ++i)
  {
    t.push_back(i * 0.1);
    c.push_back(std::max(0.0, 5.0 - std::abs(t.back() - 10.0)));
  }
  const auto tri = make_curve(t, c, 1.0);
  const auto m = measured_moments(tri);
  CHECK(m.m1 == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(std::abs(m.m3) < 1e-9);
  CHECK(m.m2 > 0.0);

  const auto ms = measured_moments(scaled(tri, 5.0));
  CHECK(ms.m1 == doctest::Approx(m.m1).epsilon(1e-14));
  CHECK(ms.m2 == doctest::Approx(m.m2).epsilon(1e-14));
  CHECK(ms.m4 == doctest::Approx(m.m4).epsilon(1e-14));
  CHECK(ms.m0 == doctest::Approx(5.0 * m.m0).epsilon(1e-14));

  const auto ade = measured_moments(ade_record(100.0, 6000, 12.0));
  const auto exact = analytical_moments(kVelocity, first_order(100, 0, 0), kLength, Formulation::Infinite);
  CHECK(std::abs(ade.m1 / exact.m1 - 1.0) < 0.005);
  CHECK(std::abs(ade.m2 / exact.m2 - 1.0) < 0.005);

  CHECK_THROWS_AS(measured_moments(make_curve({1, 2, 3}, {0, 0, 0}, 1.0)), PreconditionError);
}

TEST_CASE("analytical moments from the series expansion")
{
  const double tv = kLength / kVelocity;
  const auto y = first_order(200, 0.5, 4);
  const auto m = analytical_moments(kVelocity, y, kLength, Formulation::SemiInfUpstream);
  CHECK(m.m0 / tv == doctest::Approx(1.0).epsilon(1e-14));

  // exchange-free infinite domain against dense quadrature of the closed form
  for (double pe : {10.0, 100.0, 1000.0})
  {
    const auto a = analytical_moments(1.0, first_order(pe, 0, 0), 1.0, Formulation::Infinite);
    const auto grid = TimeGrid::covering(1e-3, 60.0);
    std::vector<double> tt = grid.times(), c(grid.count);
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = ade_analytical(pe, 1.0, 1.0, tt[i], Formulation::Infinite);
    const auto q = measured_moments(make_curve(tt, c, 1.0));
    CHECK(a.m1 == doctest::Approx(1.0 + 2.0 / pe).epsilon(1e-14));
    CHECK(q.m0 == doctest::Approx(a.m0).epsilon(1e-6));
    CHECK(q.m1 == doctest::Approx(a.m1).epsilon(1e-6));
    CHECK(q.m2 == doctest::Approx(a.m2).epsilon(1e-6));
    CHECK(q.m3 == doctest::Approx(a.m3).epsilon(1e-6));
    CHECK(q.m4 == doctest::Approx(a.m4).epsilon(1e-6));
  }

  // the boundary condition acts as an offset n_c D / v of the travel distance:
  // first moments of formulations 1, 2, 4 differ by n_c R (1 / Pe)(L / v), R = 1 + beta k_f / k_r
  const auto ade = first_order(200, 0, 0);
  const auto a1 = analytical_moments(kVelocity, ade, kLength, Formulation::SemiInfNoUpstream);
  const auto a2 = analytical_moments(kVelocity, ade, kLength, Formulation::SemiInfUpstream);
  CHECK(a2.m1 - a1.m1 == doctest::Approx(tv / 200.0).epsilon(1e-12));
  CHECK(a1.m1 == doctest::Approx(tv).epsilon(1e-14));
  const double retardation = 1.0 + 0.5 / 4.0;
  const auto f1 = analytical_moments(kVelocity, y, kLength, Formulation::SemiInfNoUpstream);
  CHECK(f1.m1 == doctest::Approx(retardation * tv).epsilon(1e-14));
  CHECK(m.m1 - f1.m1 == doctest::Approx(retardation * tv / 200.0).epsilon(1e-12));
  const auto f4 = analytical_moments(kVelocity, y, kLength, Formulation::SemiInfEquivInfinite);
  CHECK(f4.m1 - f1.m1 == doctest::Approx(2.0 * retardation * tv / 200.0).epsilon(1e-12));

  DimensionlessParams pl;
  pl.family = KernelFamily::PowerLaw;
  pl.y = {200, 0.3, 0.3};
  CHECK_THROWS_AS(analytical_moments(kVelocity, pl, kLength, Formulation::Infinite), PreconditionError);
}

TEST_CASE("analytical moments agree with quadrature of inverted curves")
{
  const auto draws = sample_prior(testing::reference_prior(KernelFamily::FirstOrder), KernelFamily::FirstOrder, 3, 5);
  for (const auto& y : draws)
    for (int f = 1; f <= 4; ++f)
    {
      const auto form = formulation_from_int(f);
      const auto a = analytical_moments(1.0, y, 1.0, form);
      const auto q = testing::inverted_moments(y, form, a.m0);
      CHECK(std::abs(q.m0 / a.m0 - 1.0) < 0.005);
      CHECK(std::abs(q.m1 / a.m1 - 1.0) < 0.005);
      CHECK(std::abs(q.m2 / a.m2 - 1.0) < 0.005);
      CHECK(std::abs(q.m3 / a.m3 - 1.0) < 0.005);
      CHECK(std::abs(q.m4 / a.m4 - 1.0) < 0.005);
    }
}

TEST_CASE("moment_match round trips")
{
  const auto y = first_order(200, 0.5, 4);
  const auto c = testing::twin_curve(y, kVelocity, kLength, dense_times(3000, 12.0));
  const auto r = moment_match(c, Formulation::SemiInfEquivInfinite);
  CHECK(r.method == Method::Moments);
  check_close(r, kVelocity, y, 0.02);

  const auto s = moment_match(scaled(c, 5.0), Formulation::SemiInfEquivInfinite);
  CHECK(s.velocity == doctest::Approx(r.velocity).epsilon(1e-6));

  const auto b0 = moment_match(ade_record(200.0, 3000, 12.0), Formulation::Infinite);
  CHECK(std::abs(b0.velocity / kVelocity - 1.0) < 0.01);
  CHECK(std::abs(b0.params.y[0] / 200.0 - 1.0) < 0.01);
  CHECK(b0.params.y[1] < 1e-4);
}

TEST_CASE("moment matching is more sensitive to a tail outlier than PBI")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const Manifold manifold{&f.dataset, &f.z};
  const auto y = sample_prior(testing::reference_prior(KernelFamily::FirstOrder), KernelFamily::FirstOrder, 1, 31)[0];
  auto times = testing::irregular_times(40, 0.4, 4.0, kLength / kVelocity, 8);
  const auto clean = pad_with_zeros(testing::twin_curve(y, kVelocity, kLength, times));
  auto dirty = clean;
  // last nonzero sample, well into the tail
  std::size_t tail = 0;
  for (std::size_t i = 0; i < dirty.size(); ++i)
    if (dirty.concentrations[i] > 0.0)
      tail = i;
  dirty.concentrations[tail] *= 2.0;

  auto shift = [](const EstimationResult& a, const EstimationResult& b) {
    double s = std::abs(std::log(a.velocity / b.velocity));
    for (int k = 0; k < 3; ++k)
      s = std::max(s, std::abs(std::log(a.params.y[k] / b.params.y[k])));
    return s;
  };
  const auto m0 = moment_match(clean, Formulation::SemiInfEquivInfinite);
  const auto m1 = moment_match(dirty, Formulation::SemiInfEquivInfinite);
  const auto grid = VelocityGrid::for_curve(clean);
  const auto p0 = estimate_pbi(embed_over_velocities(clean, f.kl, grid, 1e-4), manifold, {});
  const auto p1 = estimate_pbi(embed_over_velocities(dirty, f.kl, grid, 1e-4), manifold, {});
  MESSAGE("max log-parameter shift: moments " << shift(m0, m1) << ", PBI " << shift(p0, p1));
  CHECK(shift(m0, m1) > shift(p0, p1));
}

TEST_CASE("ADE least-squares fit")
{
  const auto c = ade_record(500.0);
  const auto r = ade_ls_fit(c);
  CHECK(r.method == Method::AdeLS);
  CHECK_FALSE(r.exchange);
  CHECK(r.formulation == Formulation::Infinite);
  CHECK(std::abs(r.velocity / kVelocity - 1.0) < 0.005);
  CHECK(std::abs(r.params.y[0] / 500.0 - 1.0) < 0.005);

  const auto s = ade_ls_fit(scaled(c, 7.0));
  CHECK(s.velocity == doctest::Approx(r.velocity).epsilon(1e-8));
  CHECK(s.params.y[0] == doctest::Approx(r.params.y[0]).epsilon(1e-8));

  // a heavy-tailed exchange curve reads as more dispersive to the ADE
  const auto y = first_order(200, 0.5, 4);
  const auto heavy = testing::twin_curve(y, kVelocity, kLength, dense_times(3000, 12.0));
  CHECK(ade_ls_fit(heavy).params.y[0] < y.y[0]);
}

TEST_CASE("ADE peak fit")
{
  const auto r = ade_peak_fit(ade_record(1000.0, 12000, 4.0));
  CHECK(r.converged);
  CHECK(std::abs(r.velocity / kVelocity - 1.0) < 0.01);
  const double d_true = kLength * kVelocity / 1000.0;
  CHECK(std::abs(r.dispersion(kLength) / d_true - 1.0) < 0.01);

  const auto sharp = ade_record(1e6, 40000, 2.0);
  const auto rs = ade_peak_fit(sharp);
  CHECK(rs.converged);
  CHECK(rs.velocity == doctest::Approx(sharp.peak_velocity()).epsilon(1e-3));

  const auto flat = make_curve({0, 1, 2, 3, 4, 5, 6}, {0, 0.5, 1, 1, 1, 0.5, 0}, kLength);
  const auto rf = ade_peak_fit(flat);
  CHECK_FALSE(rf.converged);
  CHECK_FALSE(rf.note.empty());

  const auto c = ade_record(300.0);
  const auto a = ade_peak_fit(c);
  const auto b = ade_peak_fit(scaled(c, 3.0));
  CHECK(a.velocity == doctest::Approx(b.velocity).epsilon(1e-12));
  CHECK(a.params.y[0] == doctest::Approx(b.params.y[0]).epsilon(1e-12));
}
