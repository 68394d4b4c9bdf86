#ifndef GHM_CYLINDER_CACHE_HPP
#define GHM_CYLINDER_CACHE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ghm/binary_io.hpp"
#include "ghm/symbolic.hpp"

namespace ghm {

inline constexpr std::string_view cylinder_magic = "GHMCYL01";
inline constexpr std::uint32_t cylinder_format_version = 1;

/// An M(r) inventory (or any word list) tied to the map it was computed for.
struct CylinderInventory {
  std::uint64_t map_hash = 0;
  std::uint64_t x_grid_n = 0;
  double r = 0.0;
  std::vector<CylinderSummary> cylinders;
};

inline void save_cylinders(const std::string& path, const CylinderInventory& inv) {
  io::Writer w;
  w.put(inv.map_hash);
  w.put(inv.x_grid_n);
  w.put(inv.r);
  w.put(static_cast<std::uint64_t>(inv.cylinders.size()));
  for (const auto& c : inv.cylinders) {
    w.put(static_cast<std::uint32_t>(c.word.size()));
    for (Symbol s : c.word) w.put(s);
    w.put(c.base.lo);
    w.put(c.base.hi);
    w.put(c.diameter);
  }
  io::write_file(path, cylinder_magic, cylinder_format_version, w.bytes());
}

/// Loads an inventory; refuses files for a different map when expected_hash is given.
inline CylinderInventory load_cylinders(const std::string& path, std::optional<std::uint64_t> expected_hash = std::nullopt) {
  std::string payload = io::read_file(path, cylinder_magic, cylinder_format_version,
                                      "delete the cache and re-run the enumerate stage to regenerate it");
  io::Reader r(payload);
  CylinderInventory inv;
  inv.map_hash = r.get<std::uint64_t>();
  inv.x_grid_n = r.get<std::uint64_t>();
  inv.r = r.get<double>();
  auto n = r.get<std::uint64_t>();
  if (expected_hash && *expected_hash != inv.map_hash)
    throw CacheError("cylinder cache '" + path + "' belongs to a different map");
  for (std::uint64_t i = 0; i < n; ++i) {
    CylinderSummary c;
    auto len = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < len; ++k) c.word.push_back(r.get<Symbol>());
    c.base.lo = r.get<double>();
    c.base.hi = r.get<double>();
    c.diameter = r.get<double>();
    inv.cylinders.push_back(std::move(c));
  }
  if (!r.done()) throw CacheError("cylinder cache '" + path + "' has trailing bytes");
  return inv;
}

}  // namespace ghm

#endif  // GHM_CYLINDER_CACHE_HPP
