#ifndef GHM_DIGEST_HPP
#define GHM_DIGEST_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace ghm {

/// 64-bit FNV-1a, used for map hashes and file digests.
class Fnv1a {
 public:
  Fnv1a& update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Fnv1a& update(std::string_view s) { return update(std::as_bytes(std::span(s.data(), s.size()))); }

  template <class T>
  Fnv1a& update_value(const T& v) {
    std::byte buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    return update(std::span<const std::byte>(buf, sizeof(T)));
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) { return Fnv1a{}.update(s).value(); }

/// SplitMix64 step; derives independent stream seeds from (seed, index).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace ghm

#endif  // GHM_DIGEST_HPP
