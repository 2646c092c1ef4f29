#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "gibbsvb/geometry.hpp"

namespace gibbsvb {

inline constexpr std::string_view tool_name = "gibbsvb";
inline constexpr std::string_view tool_version = "0.1.0";

// Stamp written at the top of every output file as `# key=value` comment lines.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

// 64-bit FNV-1a, hex encoded. Used to fingerprint resolved configurations.
std::string fingerprint(std::string_view text);

void write_provenance(std::ostream& out, const Provenance& prov);

// CSV with header `x,y` or `x,y,mark`. Lines starting with '#' are skipped on
// read. Coordinates are written with 17 significant digits.
PointPattern read_pattern_csv(std::istream& in, const Window& window);
PointPattern read_pattern_csv(const std::string& path, const Window& window);
void write_pattern_csv(std::ostream& out, const PointPattern& pattern, const Provenance* prov = nullptr);
void write_pattern_csv(const std::string& path, const PointPattern& pattern, const Provenance* prov = nullptr);

} // namespace gibbsvb
