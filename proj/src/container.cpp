// Copyright 2026 The rivest Authors
// SPDX-License-Identifier: Apache-2.0

#include "rivest/container.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "rivest/error.hpp"

namespace rivest
{

namespace
{

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
void put_le(std::ostream& out, T value)
{
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get_le(std::istream& in)
{
  std::array<char, sizeof(T)> bytes;
  if (!in.read(bytes.data(), sizeof(T)))
    throw FormatError("truncated container");
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string padded_magic(std::string_view magic)
{
  if (magic.size() > 8)
    throw PreconditionError("container magic longer than 8 bytes");
  std::string m(magic);
  m.resize(8, '\0');
  return m;
}

} // namespace

const RowMatrix& Container::matrix(const std::string& name) const
{
  auto it = matrices.find(name);
  if (it == matrices.end())
    throw FormatError("container has no matrix '" + name + "'");
  return it->second;
}

void write_container(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
                     const std::vector<std::pair<std::string, const RowMatrix*>>& matrices)
{
  header["matrices"] = nlohmann::json::array();
  for (const auto& [name, m] : matrices)
    header["matrices"].push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot open " + path.string() + " for writing");
  out.write(padded_magic(magic).data(), 8);
  put_le<std::uint32_t>(out, kContainerVersion);
  put_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& entry : matrices)
  {
    const RowMatrix& m = *entry.second;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      put_le<double>(out, m.data()[i]);
  }
  if (!out)
    throw Error("write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path, std::string_view magic)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  std::string got(8, '\0');
  if (!in.read(got.data(), 8) || got != padded_magic(magic))
    throw FormatError(path.string() + ": wrong file type (magic mismatch)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kContainerVersion)
    throw FormatError(path.string() + ": unsupported format version " + std::to_string(version));
  const auto length = get_le<std::uint64_t>(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw FormatError(path.string() + ": truncated header");

  Container c;
  try
  {
    c.header = nlohmann::json::parse(text);
    for (const auto& spec : c.header.at("matrices"))
    {
      const auto rows = spec.at("rows").get<Eigen::Index>();
      const auto cols = spec.at("cols").get<Eigen::Index>();
      RowMatrix m(rows, cols);
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = get_le<double>(in);
      c.matrices.emplace(spec.at("name").get<std::string>(), std::move(m));
    }
  }
  catch (const nlohmann::json::exception& e)
  {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  return c;
}

std::string sha256_hex(std::string_view bytes)
{
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int size = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &size, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < size; ++i)
  {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

} // namespace rivest
