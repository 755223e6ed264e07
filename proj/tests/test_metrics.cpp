// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <random>

#include "rivest/error.hpp"
#include "rivest/metrics.hpp"

using namespace rivest;

TEST_CASE("identical and scaled curves")
{
  const auto c = make_curve({0, 10, 25, 40, 70}, {0.0, 3.0, 5.0, 2.0, 0.5}, 100.0);
  const std::vector<double> same = c.concentrations;
  CHECK(rmse(c, same) == 0.0);
  CHECK(kld(c, same) == doctest::Approx(0.0).epsilon(1e-15));
  std::vector<double> scaled = same;
  for (double& v : scaled)
    v *= 7.5;
  CHECK(rmse(c, scaled) <= 1e-17);
  CHECK(std::abs(kld(c, scaled)) <= 1e-15);
}

TEST_CASE("hand-evaluated four-sample distributions")
{
  const auto c = make_curve({0, 1, 2, 3}, {1, 2, 3, 4}, 1.0);
  const std::vector<double> model{4, 3, 2, 1};
  CHECK(rmse(c, model) == doctest::Approx(0.16996731711975951).epsilon(1e-14));
  CHECK(kld(c, model) == doctest::Approx(0.33132088663840004).epsilon(1e-14));
  const auto r = evaluate(c, model);
  CHECK(r.samples == 4);
  CHECK(r.window_end == 72.0);
}

TEST_CASE("textbook divergence")
{
  const std::vector<double> w{1.0, 1.0};
  CHECK(kld_weighted(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}, w) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("Gibbs inequality and asymmetry")
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> w(6, 1.0);
  int asymmetric = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    std::vector<double> p(6), q(6);
    for (int i = 0; i < 6; ++i)
    {
      p[i] = u(rng);
      q[i] = u(rng);
    }
    CHECK(kld_weighted(p, q, w) >= 0.0);
    if (std::abs(kld_weighted(p, q, w) - kld_weighted(q, p, w)) > 1e-6)
      ++asymmetric;
    CHECK(rmse_weighted(p, q, w) == doctest::Approx(rmse_weighted(q, p, w)).epsilon(1e-14));
  }
  CHECK(asymmetric > 90);
}

TEST_CASE("window excludes samples beyond 24 peak times")
{
  // peak at t = 10; the sample at t = 300 lies outside the window
  const auto c = make_curve({0, 10, 20, 300}, {0.0, 4.0, 1.0, 1.0}, 1.0);
  const std::vector<double> model{0.0, 4.0, 1.0, 50.0};
  CHECK(rmse(c, model) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(evaluate(c, model).samples == 3);
}

TEST_CASE("metric errors")
{
  const auto c = make_curve({0, 1, 2, 3}, {0, 1, 0.5, 0}, 1.0);
  CHECK_THROWS_AS(rmse(c, std::vector<double>{0, 0, 0, 0}), NumericalError);
  CHECK_THROWS_AS(rmse(c, std::vector<double>{0, 0, 0}), PreconditionError);
  const std::vector<double> w{1.0, 1.0};
  CHECK_THROWS_AS(kld_weighted(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}, w), PreconditionError);
}

TEST_CASE("curve construction")
{
  const auto c = make_curve({50, 100, 150}, {1, 3, 2}, 10.0);
  CHECK(c.weights == std::vector<double>{25.0, 50.0, 25.0});
  CHECK(c.t_peak() == 100.0);
  CHECK(c.peak_interior());
  CHECK(c.peak_velocity() == 0.1);
  const auto tie = make_curve({0, 1, 2, 3}, {0, 2, 2, 0}, 1.0);
  CHECK(tie.peak_index() == 1);
  CHECK_THROWS_AS(make_curve({0, 1, 1}, {0, 1, 2}, 1.0), PreconditionError);
  CHECK_THROWS_AS(make_curve({0, 1, 2}, {0, -1, 2}, 1.0), PreconditionError);
  CHECK_THROWS_AS(make_curve({0, 1, 2}, {0, 1, 2}, 0.0), PreconditionError);
  CHECK_THROWS_AS(require_estimable(c), PreconditionError);
}
