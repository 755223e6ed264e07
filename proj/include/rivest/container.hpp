// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef RIVEST_CONTAINER_HPP
#define RIVEST_CONTAINER_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rivest/numeric.hpp"

namespace rivest
{

/// Binary artifact layout shared by datasets and KL models:
///
///   8-byte magic | u32 format version | u64 header length | JSON header |
///   f64 matrices, little-endian, row-major, in the order listed under "matrices"
///
/// The header's "matrices" array (name, rows, cols) is written by `write_container`.
inline constexpr std::uint32_t kContainerVersion = 1;

struct Container
{
  nlohmann::json header;
  std::map<std::string, RowMatrix> matrices;

  const RowMatrix& matrix(const std::string& name) const;
};

void write_container(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
                     const std::vector<std::pair<std::string, const RowMatrix*>>& matrices);

Container read_container(const std::filesystem::path& path, std::string_view magic);

/// Lower-case hex SHA-256 of a byte string / a file's content.
std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

} // namespace rivest

#endif // RIVEST_CONTAINER_HPP
