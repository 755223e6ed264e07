// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_MEMORY_KERNELS_HPP
#define RIVEST_MEMORY_KERNELS_HPP

#include <complex>
#include <string_view>
#include <variant>

namespace rivest
{

using Complex = std::complex<double>;

/// First-order exchange: g(t) = k_f exp(-k_r t), G(s) = k_f / (k_r + s).
struct FirstOrder
{
  double k_f = 1.0; ///< dimensionless forward rate
  double k_r = 1.0; ///< dimensionless reverse rate
};

/// Pure power law: g(t) = alpha t^-gamma / Gamma(1 - gamma), G(s) = alpha s^(gamma - 1).
struct PowerLaw
{
  double alpha = 1.0; ///< dimensionless exchange scale
  double gamma = 0.5; ///< exponent, 0 < gamma <= 1
};

using MemoryKernel = std::variant<FirstOrder, PowerLaw>;

enum class KernelFamily
{
  FirstOrder,
  PowerLaw,
};

KernelFamily family_of(const MemoryKernel& kernel);

std::string_view to_string(KernelFamily family);
KernelFamily parse_family(std::string_view name);

/// Throws PreconditionError unless every parameter is finite and within range.
/// Rates and scales may be zero (a switched-off exchange); gamma must lie in (0, 1].
void validate(const MemoryKernel& kernel);

/// Laplace transform G(s), principal branch for the complex power.
/// Throws PoleError for the power law at s = 0 with gamma < 1.
Complex kernel_laplace(const MemoryKernel& kernel, Complex s);

/// Time-domain memory function g(t) for t > 0.
/// Throws PoleError for the power law with gamma = 1 (Gamma(0) pole).
double kernel_time(const MemoryKernel& kernel, double t);

} // namespace rivest

#endif // RIVEST_MEMORY_KERNELS_HPP
