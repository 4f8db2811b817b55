#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbbc/model.hpp"

namespace pbbc {

/// Lossless stage applied after Huffman coding. Ids are stored in the container header.
enum class Backend : std::uint8_t {
  Store = 0,
  Deflate = 1,
};

inline constexpr Backend kDefaultBackend = Backend::Deflate;

inline std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Store: return "store";
    case Backend::Deflate: return "deflate";
  }
  return "unknown";
}

inline Backend backend_from_id(std::uint8_t id) {
  switch (id) {
    case 0: return Backend::Store;
    case 1: return Backend::Deflate;
    default: throw Error(ErrorCode::BackendMismatch, "unknown backend id " + std::to_string(id));
  }
}

/// Accepts a name ("store", "deflate"/"zlib") or a numeric id.
inline Backend parse_backend(std::string_view text) {
  if (text == "store" || text == "0") return Backend::Store;
  if (text == "deflate" || text == "zlib" || text == "1") return Backend::Deflate;
  throw Error(ErrorCode::BackendMismatch, "unknown backend '" + std::string(text) + "'");
}

/// Backend named by PBBC_BACKEND, or the default.
inline Backend backend_from_env() {
  const char* value = std::getenv("PBBC_BACKEND");
  if (value == nullptr || *value == '\0') return kDefaultBackend;
  return parse_backend(value);
}

inline std::vector<std::uint8_t> backend_compress(Backend backend, std::span<const std::uint8_t> data) {
  if (backend == Backend::Store) return {data.begin(), data.end()};
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::vector<std::uint8_t> out(bound);
  const int rc = compress2(out.data(), &bound, data.data(), static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) throw Error(ErrorCode::Io, "deflate failed with code " + std::to_string(rc));
  out.resize(bound);
  return out;
}

inline std::vector<std::uint8_t> backend_decompress(Backend backend, std::span<const std::uint8_t> data,
                                                    std::uint64_t raw_size) {
  if (backend == Backend::Store) {
    if (data.size() != raw_size) throw Error(ErrorCode::TruncatedPayload, "stored payload size mismatch");
    return {data.begin(), data.end()};
  }
  std::vector<std::uint8_t> out(static_cast<std::size_t>(raw_size));
  uLongf length = static_cast<uLongf>(raw_size);
  const int rc = uncompress(out.data(), &length, data.data(), static_cast<uLong>(data.size()));
  if (rc != Z_OK || length != raw_size)
    throw Error(ErrorCode::CorruptContainer, "deflate payload failed to inflate");
  return out;
}

}  // namespace pbbc
