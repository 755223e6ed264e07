// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_EXECUTION_HPP
#define RIVEST_EXECUTION_HPP

namespace rivest
{

/// Selects the OpenMP kernel or its single-threaded reference twin. Both produce
/// bit-identical results; the serial path exists for testing and benchmarking.
enum class Execution
{
  Parallel,
  Serial,
};

} // namespace rivest

#endif // RIVEST_EXECUTION_HPP
