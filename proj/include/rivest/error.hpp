// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_ERROR_HPP
#define RIVEST_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rivest
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller-side contract was violated (bad argument, malformed input).
class PreconditionError : public Error
{
public:
  using Error::Error;
};

/// A numerical procedure could not produce a usable value.
class NumericalError : public Error
{
public:
  using Error::Error;
};

/// Evaluation at a singular point of a transform (e.g. power-law kernel at s = 0).
class PoleError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

/// Malformed or incompatible file content.
class FormatError : public Error
{
public:
  using Error::Error;
};

} // namespace rivest

#endif // RIVEST_ERROR_HPP
