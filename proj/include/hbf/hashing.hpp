// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace hbf {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

/// First 64 bits of the SHA-256 digest, for compact headers.
std::uint64_t hash64(std::string_view text);

}  // namespace hbf
