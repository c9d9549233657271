#include "prefgeom/hashing.hpp"

#include <fstream>
#include <sstream>

#include "prefgeom/types.hpp"

namespace prefgeom {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string hash_file_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "hash_file_hex: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

} // namespace prefgeom
