// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>

#include "rivest/embedding.hpp"
#include "rivest/error.hpp"
#include "support.hpp"

using namespace rivest;

namespace
{

constexpr double kLength = 500.0;
constexpr double kVelocity = 0.4; // L / v = 1250 s

/// Dense record of a KL-space curve, in seconds.
MeasuredCurve from_coefficients(const KLModel& kl, const Eigen::VectorXd& z, std::size_t count)
{
  const auto c = reconstruct(kl, z);
  const double l_over_v = kLength / kVelocity;
  std::vector<double> t, v;
  for (std::size_t i = 0; i < count; ++i)
  {
    const double tau = 24.0 * static_cast<double>(i) / static_cast<double>(count - 1);
    t.push_back(tau * l_over_v);
    v.push_back(std::max(0.0, interp_uniform(c, kl.grid.step, tau)));
  }
  return make_curve(std::move(t), std::move(v), kLength);
}

MeasuredCurve field_like(std::size_t member, std::size_t count, std::uint64_t seed)
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  auto times = testing::irregular_times(count, 0.4, 4.0, kLength / kVelocity, seed);
  return pad_with_zeros(testing::twin_curve(f.dataset.sample(member), kVelocity, kLength, times));
}

} // namespace

TEST_CASE("zero padding follows the largest spacing")
{
  const auto c = make_curve({50, 100, 150}, {1, 3, 2}, 10.0);
  const auto p = pad_with_zeros(c);
  std::vector<double> expected{0, 50, 100, 150};
  for (double t = 200; t <= 2400; t += 50)
    expected.push_back(t);
  REQUIRE(p.times.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(p.times[i] == doctest::Approx(expected[i]));
  CHECK(p.concentrations[0] == 0.0);
  CHECK(p.concentrations[2] == 3.0);
  CHECK(p.concentrations.back() == 0.0);
  CHECK(p.size() > c.size());
  CHECK(p.weights[1] == doctest::Approx(50.0));

  std::vector<double> t, v;
  for (int i = 0; i <= 48; ++i)
  {
    t.push_back(i * 5.0);
    v.push_back(i == 2 ? 1.0 : 0.5);
  }
  const auto full = make_curve(t, v, 1.0);
  const auto same = pad_with_zeros(full);
  CHECK(same.times == full.times);
  CHECK(same.weights == full.weights);
}

TEST_CASE("round trip from known coefficients")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const Eigen::VectorXd z0 = f.z.row(11).transpose();
  const auto curve = from_coefficients(f.kl, z0, 4000);
  const auto z = embed(curve, f.kl, kVelocity, 1e-9);
  for (Eigen::Index j = 0; j < z0.size(); ++j)
    if (std::abs(z0[j]) > 1e-2 * z0.norm())
      CHECK(std::abs(z[j] - z0[j]) <= 1e-3 * std::abs(z0[j]));
}

TEST_CASE("limits of the regularization")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const auto curve = field_like(5, 40, 1);
  CHECK(embed(curve, f.kl, kVelocity, 1e12).norm() <= 1e-12);

  const auto mean_curve = from_coefficients(f.kl, Eigen::VectorXd::Zero(20), 800);
  for (double s : {1e-4, 1e-2, 1.0})
    CHECK(embed(mean_curve, f.kl, kVelocity, s).norm() <= 1e-3 * std::sqrt(f.kl.eigenvalues[0]));

  // Prior-weighted norm Z^T diag(lambda)^-1 Z shrinks as sigma_c grows.
  double previous = INFINITY;
  for (double s : logspace(1e-5, 10.0, 13))
  {
    const auto z = embed(curve, f.kl, kVelocity, s);
    const double n = z.cwiseProduct(f.kl.eigenvalues.cwiseInverse()).dot(z);
    CHECK(n <= previous * (1.0 + 1e-12));
    previous = n;
  }
}

TEST_CASE("solution satisfies the normal equations")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const auto curve = field_like(8, 40, 2);
  for (double s : {1e-4, 1e-2, 1.0})
  {
    const auto z = embed(curve, f.kl, 1.05 * kVelocity, s);
    const auto sys = embed_system(curve, f.kl, 1.05 * kVelocity, s);
    CHECK((sys.lhs * z - sys.rhs).norm() <= 1e-10 * (sys.lhs * z).norm() + 1e-300);
  }
}

TEST_CASE("scale invariance")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const auto curve = field_like(9, 40, 3);
  auto scaled = curve;
  for (double& c : scaled.concentrations)
    c *= 37.0;
  const auto a = embed(curve, f.kl, kVelocity, 1e-3);
  const auto b = embed(scaled, f.kl, kVelocity, 1e-3);
  CHECK((a - b).norm() <= 1e-12 * a.norm());
}

TEST_CASE("embedding over the velocity grid")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const auto curve = field_like(4, 40, 4);
  const auto grid = VelocityGrid::for_curve(curve);
  CHECK(grid.velocity(0) == doctest::Approx(0.9 * curve.peak_velocity()));
  CHECK(grid.velocity(120) == doctest::Approx(1.5 * curve.peak_velocity()));
  const auto e = embed_over_velocities(curve, f.kl, grid, 1e-3);
  CHECK(e.size() == 121);
  CHECK(e.z.rows() == 121);
  const auto again = embed_over_velocities(curve, f.kl, grid, 1e-3);
  const auto serial = embed_over_velocities(curve, f.kl, grid, 1e-3, Execution::Serial);
  CHECK(e.z == again.z);
  CHECK(e.z == serial.z);
  for (bool ok : e.feasible)
    CHECK(ok);
  for (std::size_t m = 0; m < e.size(); m += 30)
    CHECK((e.z.row(static_cast<Eigen::Index>(m)).transpose() - embed(curve, f.kl, e.velocities[m], 1e-3)).norm() ==
          0.0);
}

TEST_CASE("infeasible velocity")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  const auto curve = make_curve({1000, 2000, 3000, 4000}, {1, 2, 1, 0.5}, 1.0);
  CHECK_THROWS_AS(embed(curve, f.kl, 1.0, 1e-3), NumericalError);
  VelocityGrid far{100.0};
  far.count = 3;
  const auto e = embed_over_velocities(curve, f.kl, far, 1e-3);
  CHECK_FALSE(e.feasible[0]);
}

TEST_CASE("sigma_c tuning")
{
  const auto& f = testing::fixture(KernelFamily::FirstOrder);
  std::vector<MeasuredCurve> curves;
  for (std::size_t i = 0; i < 6; ++i)
    curves.push_back(field_like(20 + i, 40, 10 + i));

  const std::vector<double> one{0.37};
  CHECK(tune_sigma_c(curves, f.kl, one, 1).sigma_c == 0.37);
  CHECK_THROWS_AS(tune_sigma_c(curves, f.kl, std::vector<double>{}, 1), PreconditionError);

  const auto candidates = logspace(1e-6, 1e-2, 17);
  const auto a = tune_sigma_c(curves, f.kl, candidates, 99);
  const auto b = tune_sigma_c(curves, f.kl, candidates, 99);
  CHECK(a.sigma_c == b.sigma_c);
  CHECK(a.scores == b.scores);
  MESSAGE("tuned sigma_c = " << a.sigma_c);
  CHECK(a.sigma_c > candidates.front());
  CHECK(a.sigma_c < candidates.back());
}
