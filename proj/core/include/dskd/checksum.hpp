#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace dskd {

/// FNV-1a, 64-bit. Used to fingerprint artifacts in manifests, not for security.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// 16 lowercase hex digits of the file's FNV-1a hash.
std::string file_checksum(const std::filesystem::path& path);

std::string to_hex(std::uint64_t v);

/// Reads a whole file as bytes; the error names the path.
std::string read_file(const std::filesystem::path& path);
/// Writes bytes, creating parent directories; the error names the path.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dskd
