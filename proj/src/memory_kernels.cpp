// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/memory_kernels.hpp"

#include <cmath>
#include <string>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

} // namespace

KernelFamily family_of(const MemoryKernel& kernel)
{
  return std::holds_alternative<FirstOrder>(kernel) ? KernelFamily::FirstOrder : KernelFamily::PowerLaw;
}

std::string_view to_string(KernelFamily family)
{
  return family == KernelFamily::FirstOrder ? "first_order" : "power_law";
}

KernelFamily parse_family(std::string_view name)
{
  if (name == "first_order")
    return KernelFamily::FirstOrder;
  if (name == "power_law")
    return KernelFamily::PowerLaw;
  throw PreconditionError("unknown memory-function family '" + std::string(name) + "'");
}

void validate(const MemoryKernel& kernel)
{
  std::visit(overloaded{
                 [](const FirstOrder& k) {
                   if (!std::isfinite(k.k_f) || !std::isfinite(k.k_r) || k.k_f < 0.0 || k.k_r < 0.0)
                     throw PreconditionError("first-order kernel needs finite k_f >= 0 and k_r >= 0");
                 },
                 [](const PowerLaw& k) {
                   if (!std::isfinite(k.alpha) || k.alpha < 0.0)
                     throw PreconditionError("power-law kernel needs finite alpha >= 0");
                   if (!(k.gamma > 0.0 && k.gamma <= 1.0))
                     throw PreconditionError("power-law kernel needs 0 < gamma <= 1");
                 },
             },
             kernel);
}

Complex kernel_laplace(const MemoryKernel& kernel, Complex s)
{
  return std::visit(overloaded{
                        [s](const FirstOrder& k) -> Complex {
                          const Complex den = k.k_r + s;
                          if (den == Complex(0.0))
                            throw PoleError("first-order kernel evaluated at its pole s = -k_r");
                          return k.k_f / den;
                        },
                        [s](const PowerLaw& k) -> Complex {
                          if (k.gamma == 1.0)
                            return {k.alpha, 0.0};
                          if (s == Complex(0.0))
                            throw PoleError("power-law kernel evaluated at s = 0");
                          return k.alpha * std::pow(s, k.gamma - 1.0);
                        },
                    },
                    kernel);
}

double kernel_time(const MemoryKernel& kernel, double t)
{
  if (!(t > 0.0))
    throw PreconditionError("kernel_time requires t > 0");
  return std::visit(overloaded{
                        [t](const FirstOrder& k) { return k.k_f * std::exp(-k.k_r * t); },
                        [t](const PowerLaw& k) {
                          if (k.gamma >= 1.0)
                            throw PoleError("power-law memory function undefined in time for gamma = 1");
                          return k.alpha * std::pow(t, -k.gamma) / std::tgamma(1.0 - k.gamma);
                        },
                    },
                    kernel);
}

} // namespace rivest
