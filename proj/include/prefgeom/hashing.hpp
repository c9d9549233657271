#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace prefgeom {

// FNV-1a 64-bit; used for content manifests and config snapshots, not security.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);
std::string hash_file_hex(const std::string& path);

} // namespace prefgeom
