// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <cmath>
#include <vector>

#include "rivest/error.hpp"
#include "rivest/memory_kernels.hpp"
#include "rivest/numeric.hpp"

using namespace rivest;

TEST_CASE("kernel_laplace examples")
{
  CHECK(kernel_laplace(FirstOrder{2.0, 4.0}, 0.0).real() == doctest::Approx(0.5));
  CHECK(kernel_laplace(FirstOrder{1.0, 1.0}, Complex(1.0, 0.0)).real() == doctest::Approx(0.5));
  for (Complex s : {Complex(0.0), Complex(2.0, 3.0), Complex(0.1, -7.0)})
  {
    const Complex g = kernel_laplace(PowerLaw{3.0, 1.0}, s);
    CHECK(g.real() == doctest::Approx(3.0));
    CHECK(g.imag() == doctest::Approx(0.0));
  }
}

TEST_CASE("power law pole at s = 0 is signalled")
{
  CHECK_THROWS_AS(kernel_laplace(PowerLaw{1.0, 0.5}, 0.0), PoleError);
  CHECK_THROWS_AS(kernel_time(PowerLaw{1.0, 1.0}, 1.0), PoleError);
}

TEST_CASE("power law uses the principal branch")
{
  // s = -1 + 0i sits on the branch cut; principal arg = pi.
  const Complex g = kernel_laplace(PowerLaw{1.0, 0.5}, Complex(0.0, 1.0));
  const Complex expected = std::exp(-0.5 * Complex(0.0, M_PI / 2));
  CHECK(g.real() == doctest::Approx(expected.real()));
  CHECK(g.imag() == doctest::Approx(expected.imag()));
}

TEST_CASE("kernel_time examples")
{
  CHECK(kernel_time(FirstOrder{1.0, 0.0}, 3.7) == doctest::Approx(1.0));
  CHECK(kernel_time(FirstOrder{2.0, 1.0}, 1.0) == doctest::Approx(0.7357588823428847).epsilon(1e-12));
  CHECK(kernel_time(PowerLaw{1.0, 0.5}, 1.0) == doctest::Approx(0.5641895835477563).epsilon(1e-12));
  CHECK_THROWS_AS(kernel_time(FirstOrder{}, 0.0), PreconditionError);
}

TEST_CASE("first-order transform matches quadrature of the time kernel")
{
  const FirstOrder k{1.7, 0.8};
  const double step = 1e-3;
  const double t_max = 60.0;
  for (double s : {0.5, 1.0, 2.0})
  {
    std::vector<double> y;
    for (double t = 0.0; t <= t_max + 1e-12; t += step)
      y.push_back(k.k_f * std::exp(-k.k_r * t) * std::exp(-s * t));
    const double numeric = trapezoid_uniform(y, step);
    const double exact = kernel_laplace(k, s).real();
    CHECK(std::abs(numeric - exact) / exact <= 1e-4);
  }
}

TEST_CASE("validation")
{
  CHECK_NOTHROW(validate(MemoryKernel{FirstOrder{0.0, 0.0}}));
  CHECK_THROWS_AS(validate(MemoryKernel{FirstOrder{-1.0, 1.0}}), PreconditionError);
  CHECK_THROWS_AS(validate(MemoryKernel{PowerLaw{1.0, 0.0}}), PreconditionError);
  CHECK_THROWS_AS(validate(MemoryKernel{PowerLaw{1.0, 1.2}}), PreconditionError);
  CHECK(parse_family("power_law") == KernelFamily::PowerLaw);
  CHECK_THROWS_AS(parse_family("gamma"), PreconditionError);
}
