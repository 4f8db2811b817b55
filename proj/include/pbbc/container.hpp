#pragma once

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <vector>

#include "pbbc/backend.hpp"
#include "pbbc/huffman.hpp"
#include "pbbc/layout.hpp"

namespace pbbc {

// Container format, version 1. All integers little-endian, reals IEEE-754.
//
//   offset  size  field
//   0       4     magic "PBBC"
//   4       2     format version (1)
//   6       1     D
//   7       1     M (32 or 64)
//   8       8     N
//   16      8     epsilon (f64, absolute)
//   24      8     delta_max (f64)
//   32      8     r_ratio (f64)
//   40      8     n_seq
//   48      1     flags: bit0 sequences reordered, bit1 R-index sorted, bit2 sidecar
//   49      1     backend id (0 store, 1 deflate)
//   50      3     dimension order of packed codes (0xFF for unused slots)
//   53      7     reserved, zero
//   60      4     CRC-32 of bytes 0..59
//   64      256   Huffman code length per byte symbol
//   320     8     layout bit length
//   328     8     layout byte length (= Huffman symbol count)
//   336     8     Huffman bit length
//   344     8     Huffman byte length (payload size before the backend)
//   352     8     stored payload size
//   360     ...   payload
//   then, when flag bit2 is set:
//           8     sidecar raw size (4 bytes per particle, u32 original index)
//           8     sidecar stored size
//           ...   sidecar bytes, through the same backend

inline constexpr std::array<std::uint8_t, 4> kMagic = {'P', 'B', 'B', 'C'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kFixedHeaderBytes = 64;

struct ContainerHeader {
  std::uint16_t version = kFormatVersion;
  int dims = 3;
  int precision = 64;
  std::uint64_t num_particles = 0;
  double epsilon = 0.0;
  double delta_max = 0.0;
  double r_ratio = 0.0;
  std::uint64_t n_seq = 0;
  bool sequences_reordered = false;
  bool rindex_sorted = false;
  bool has_sidecar = false;
  Backend backend = kDefaultBackend;
  DimOrder dim_order = identity_order();

  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct CompressedContainer {
  ContainerHeader header;
  HuffmanTable table;
  std::uint64_t layout_bits = 0;
  std::uint64_t layout_bytes = 0;
  std::uint64_t huffman_bits = 0;
  std::vector<std::uint8_t> huffman_payload;  // before the backend
  std::optional<std::vector<ParticleId>> sidecar;
};

namespace detail {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class ByteCursor {
 public:
  explicit ByteCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U{bytes_[pos_ + i]} << (8 * i));
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::span<const std::uint8_t> take(std::uint64_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::TruncatedPayload, "container ends early");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_header(const ContainerHeader& h) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  detail::put_le<std::uint16_t>(out, h.version);
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(h.dims));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(h.precision));
  detail::put_le<std::uint64_t>(out, h.num_particles);
  detail::put_le<double>(out, h.epsilon);
  detail::put_le<double>(out, h.delta_max);
  detail::put_le<double>(out, h.r_ratio);
  detail::put_le<std::uint64_t>(out, h.n_seq);
  const std::uint8_t flags = (h.sequences_reordered ? 1u : 0u) | (h.rindex_sorted ? 2u : 0u) | (h.has_sidecar ? 4u : 0u);
  detail::put_le<std::uint8_t>(out, flags);
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(h.backend));
  for (int k = 0; k < kMaxDims; ++k)
    detail::put_le<std::uint8_t>(out, k < h.dims ? static_cast<std::uint8_t>(h.dim_order[k]) : 0xFF);
  out.resize(60, 0);
  detail::put_le<std::uint32_t>(out, detail::crc32_of(out));
  return out;
}

inline ContainerHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeaderBytes) throw Error(ErrorCode::CorruptContainer, "container shorter than its header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw Error(ErrorCode::CorruptContainer, "bad magic");
  detail::ByteCursor in(bytes.first(kFixedHeaderBytes));
  in.take(4);
  ContainerHeader h;
  h.version = in.get<std::uint16_t>();
  if (h.version != kFormatVersion)
    throw Error(ErrorCode::CorruptContainer, "unsupported format version " + std::to_string(h.version));
  h.dims = in.get<std::uint8_t>();
  h.precision = in.get<std::uint8_t>();
  h.num_particles = in.get<std::uint64_t>();
  h.epsilon = in.get<double>();
  h.delta_max = in.get<double>();
  h.r_ratio = in.get<double>();
  h.n_seq = in.get<std::uint64_t>();
  const auto flags = in.get<std::uint8_t>();
  h.sequences_reordered = flags & 1u;
  h.rindex_sorted = flags & 2u;
  h.has_sidecar = flags & 4u;
  const auto backend_id = in.get<std::uint8_t>();
  std::array<std::uint8_t, kMaxDims> order{};
  for (auto& o : order) o = in.get<std::uint8_t>();
  in.take(7);
  const auto stored_crc = in.get<std::uint32_t>();
  if (stored_crc != detail::crc32_of(bytes.first(60))) throw Error(ErrorCode::CorruptContainer, "header CRC mismatch");

  if (h.dims < 2 || h.dims > kMaxDims || (h.precision != 32 && h.precision != 64))
    throw Error(ErrorCode::CorruptContainer, "invalid dims or precision");
  if (!(h.epsilon > 0.0)) throw Error(ErrorCode::CorruptContainer, "invalid epsilon");
  h.backend = backend_from_id(backend_id);
  std::array<bool, kMaxDims> seen{};
  for (int k = 0; k < h.dims; ++k) {
    if (order[k] >= h.dims || seen[order[k]]) throw Error(ErrorCode::CorruptContainer, "invalid dimension order");
    seen[order[k]] = true;
    h.dim_order[k] = order[k];
  }
  return h;
}

inline std::vector<std::uint8_t> write_container(const CompressedContainer& c) {
  std::vector<std::uint8_t> out = encode_header(c.header);
  out.insert(out.end(), c.table.lengths.begin(), c.table.lengths.end());
  const auto payload = backend_compress(c.header.backend, c.huffman_payload);
  detail::put_le<std::uint64_t>(out, c.layout_bits);
  detail::put_le<std::uint64_t>(out, c.layout_bytes);
  detail::put_le<std::uint64_t>(out, c.huffman_bits);
  detail::put_le<std::uint64_t>(out, c.huffman_payload.size());
  detail::put_le<std::uint64_t>(out, payload.size());
  out.insert(out.end(), payload.begin(), payload.end());
  if (c.header.has_sidecar) {
    if (!c.sidecar) throw Error(ErrorCode::MissingSidecar, "header announces a sidecar that is absent");
    std::vector<std::uint8_t> raw;
    raw.reserve(c.sidecar->size() * 4);
    for (ParticleId id : *c.sidecar) detail::put_le<std::uint32_t>(raw, id);
    const auto stored = backend_compress(c.header.backend, raw);
    detail::put_le<std::uint64_t>(out, raw.size());
    detail::put_le<std::uint64_t>(out, stored.size());
    out.insert(out.end(), stored.begin(), stored.end());
  }
  return out;
}

/// Bytes occupied by the sidecar section of a serialized container (0 if none).
inline std::size_t sidecar_section_bytes(std::span<const std::uint8_t> bytes) {
  const ContainerHeader h = decode_header(bytes);
  if (!h.has_sidecar) return 0;
  detail::ByteCursor in(bytes);
  in.take(kFixedHeaderBytes + 256 + 32);
  in.take(in.get<std::uint64_t>());
  return in.remaining();
}

inline CompressedContainer read_container(std::span<const std::uint8_t> bytes) {
  CompressedContainer c;
  c.header = decode_header(bytes);
  detail::ByteCursor in(bytes);
  in.take(kFixedHeaderBytes);
  const auto lengths = in.take(256);
  std::copy(lengths.begin(), lengths.end(), c.table.lengths.begin());
  c.layout_bits = in.get<std::uint64_t>();
  c.layout_bytes = in.get<std::uint64_t>();
  c.huffman_bits = in.get<std::uint64_t>();
  const auto huffman_bytes = in.get<std::uint64_t>();
  const auto stored = in.get<std::uint64_t>();
  if (c.layout_bytes != (c.layout_bits + 7) / 8 || huffman_bytes != (c.huffman_bits + 7) / 8)
    throw Error(ErrorCode::CorruptContainer, "inconsistent payload lengths");
  if (c.header.backend == Backend::Deflate && huffman_bytes > 1032ull * stored + 1024)
    throw Error(ErrorCode::CorruptContainer, "implausible payload expansion");
  c.huffman_payload = backend_decompress(c.header.backend, in.take(stored), huffman_bytes);
  if (c.header.has_sidecar) {
    const auto raw_size = in.get<std::uint64_t>();
    const auto stored_size = in.get<std::uint64_t>();
    if (raw_size != 4 * c.header.num_particles) throw Error(ErrorCode::CorruptContainer, "sidecar size mismatch");
    const auto raw = backend_decompress(c.header.backend, in.take(stored_size), raw_size);
    detail::ByteCursor ids(raw);
    std::vector<ParticleId> sidecar(static_cast<std::size_t>(c.header.num_particles));
    for (auto& id : sidecar) id = ids.get<std::uint32_t>();
    c.sidecar = std::move(sidecar);
  }
  if (in.remaining() != 0) throw Error(ErrorCode::CorruptContainer, "trailing bytes after container");
  return c;
}

}  // namespace pbbc
