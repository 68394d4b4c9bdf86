#ifndef GHM_BINARY_IO_HPP
#define GHM_BINARY_IO_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>

#include "ghm/digest.hpp"
#include "ghm/errors.hpp"

namespace ghm::io {

/// Little-endian-as-host append buffer for versioned binary files.
class Writer {
 public:
  template <class T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const char* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.append(s); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  template <class T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (data_.size() - pos_ < sizeof(T)) throw CacheError("file truncated: payload ends early");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view get_bytes(std::size_t n) {
    if (data_.size() - pos_ < n) throw CacheError("file truncated: payload ends early");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

/// Layout: magic (8 bytes) | version u32 | payload | fnv1a-64 of everything before it.
inline void write_file(const std::string& path, std::string_view magic, std::uint32_t version, const std::string& payload) {
  Writer w;
  w.put_bytes(magic);
  w.put(version);
  w.put_bytes(payload);
  std::uint64_t digest = fnv1a(w.bytes());
  w.put(digest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CacheError("cannot open '" + path + "' for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CacheError("write to '" + path + "' failed");
}

/// Returns the payload after checking digest, magic and version.
inline std::string read_file(const std::string& path, std::string_view magic, std::uint32_t version,
                             const std::string& migration_hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t head = magic.size() + sizeof(std::uint32_t);
  if (data.size() < head + sizeof(std::uint64_t))
    throw CacheError("digest check failed for '" + path + "': file truncated");
  std::uint64_t stored;
  std::memcpy(&stored, data.data() + data.size() - sizeof stored, sizeof stored);
  std::string_view body(data.data(), data.size() - sizeof stored);
  if (fnv1a(body) != stored) throw CacheError("digest check failed for '" + path + "': file is truncated or corrupted");
  if (body.substr(0, magic.size()) != magic) throw CacheError("'" + path + "' is not a " + std::string(magic) + " file");
  std::uint32_t v;
  std::memcpy(&v, body.data() + magic.size(), sizeof v);
  if (v != version)
    throw CacheError("'" + path + "' has format version " + std::to_string(v) + ", expected " +
                     std::to_string(version) + "; " + migration_hint);
  return std::string(body.substr(head));
}

}  // namespace ghm::io

#endif  // GHM_BINARY_IO_HPP
