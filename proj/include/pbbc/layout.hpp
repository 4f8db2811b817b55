#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pbbc/bitstream.hpp"
#include "pbbc/reducer.hpp"

namespace pbbc {

inline constexpr int kWidthFieldBits = 6;
inline constexpr int kCountFieldBits = 32;

using DimOrder = std::array<int, kMaxDims>;

inline DimOrder identity_order() { return {0, 1, 2}; }

/// Bit cost of the four parts of a serialized sequence layout.
struct LayoutAccounting {
  std::uint64_t centers_bits = 0;
  std::uint64_t width_fields_bits = 0;
  std::uint64_t codes_bits = 0;
  std::uint64_t terminator_bits = 0;

  std::uint64_t total() const { return centers_bits + width_fields_bits + codes_bits + terminator_bits; }

  friend bool operator==(const LayoutAccounting&, const LayoutAccounting&) = default;
};

struct LayoutParams {
  int dims = 3;
  int precision = 64;
  DimOrder dim_order = identity_order();
};

struct SerializedLayout {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;
  LayoutAccounting accounting;
};

/// Expected accounting computed from the field-size rules alone.
inline LayoutAccounting account_layout(std::span<const Sequence> sequences, int dims, int precision) {
  LayoutAccounting acc;
  const auto n_seq = static_cast<std::uint64_t>(sequences.size());
  acc.centers_bits = static_cast<std::uint64_t>(dims) * precision * n_seq;
  acc.width_fields_bits = static_cast<std::uint64_t>(kWidthFieldBits) * dims * n_seq;
  acc.terminator_bits = kCountFieldBits * n_seq;
  for (const Sequence& s : sequences)
    acc.codes_bits += static_cast<std::uint64_t>(bits_per_particle(s, dims, precision)) * (s.particle_count - 1);
  return acc;
}

/// Writes sequences in layout order. Per sequence: the center at source
/// precision, D six-bit width fields, the 32-bit particle count, then each
/// non-center particle's words in `dim_order`.
inline SerializedLayout serialize_layout(std::span<const Sequence> sequences, const LayoutParams& params) {
  const int dims = params.dims;
  const int precision = params.precision;
  BitWriter out;
  SerializedLayout result;
  for (const Sequence& s : sequences) {
    const std::uint64_t start = out.bit_length();
    for (int d = 0; d < dims; ++d) out.write(encode_raw(s.center[d], precision), precision);
    result.accounting.centers_bits += out.bit_length() - start;

    std::uint64_t mark = out.bit_length();
    for (int d = 0; d < dims; ++d) {
      const int w = s.widths[d];
      if (w < 0 || (w > 62 && w != kLosslessWidth))
        throw Error(ErrorCode::WidthOverflow, "width field " + std::to_string(w) + " does not fit");
      out.write(static_cast<std::uint64_t>(w), kWidthFieldBits);
    }
    result.accounting.width_fields_bits += out.bit_length() - mark;

    mark = out.bit_length();
    out.write(s.particle_count, kCountFieldBits);
    result.accounting.terminator_bits += out.bit_length() - mark;

    mark = out.bit_length();
    for (std::size_t p = 0; p + 1 < s.particle_count; ++p)
      for (int d : std::span(params.dim_order).first(dims))
        out.write(s.word(p, d, dims), field_bits(s.widths[d], precision));
    result.accounting.codes_bits += out.bit_length() - mark;
  }
  result.bit_length = out.bit_length();
  result.bytes = out.take();
  return result;
}

/// Inverse of serialize_layout. Origin ids are not part of the layout.
inline std::vector<Sequence> parse_layout(std::span<const std::uint8_t> bytes, std::uint64_t bit_length,
                                          std::uint64_t n_seq, const LayoutParams& params) {
  const int dims = params.dims;
  const int precision = params.precision;
  BitReader in(bytes, bit_length);
  std::vector<Sequence> sequences;
  sequences.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n_seq, 1u << 20)));
  for (std::uint64_t i = 0; i < n_seq; ++i) {
    Sequence s;
    for (int d = 0; d < dims; ++d) s.center[d] = decode_raw(in.read(precision), precision);
    for (int d = 0; d < dims; ++d) {
      s.widths[d] = static_cast<int>(in.read(kWidthFieldBits));
      if (s.widths[d] > 62 && s.widths[d] != kLosslessWidth)
        throw Error(ErrorCode::CorruptContainer, "invalid width field");
    }
    s.particle_count = static_cast<std::uint32_t>(in.read(kCountFieldBits));
    if (s.particle_count == 0) throw Error(ErrorCode::CorruptContainer, "sequence with zero particles");
    const std::uint64_t coded = s.particle_count - 1ull;
    const std::uint64_t needed = coded * static_cast<std::uint64_t>(bits_per_particle(s, dims, precision));
    if (needed > in.remaining()) throw Error(ErrorCode::TruncatedPayload, "sequence codes exceed payload");
    s.payload.resize(coded * dims);
    for (std::uint64_t p = 0; p < coded; ++p)
      for (int d : std::span(params.dim_order).first(dims))
        s.payload[p * dims + d] = in.read(field_bits(s.widths[d], precision));
    sequences.push_back(std::move(s));
  }
  if (in.remaining() != 0) throw Error(ErrorCode::CorruptContainer, "trailing bits after last sequence");
  return sequences;
}

/// Stable sort of sequences by ascending bits per particle.
inline void reorder_sequences(std::vector<Sequence>& sequences, int dims, int precision) {
  std::stable_sort(sequences.begin(), sequences.end(), [&](const Sequence& a, const Sequence& b) {
    return bits_per_particle(a, dims, precision) < bits_per_particle(b, dims, precision);
  });
}

/// Shannon entropy (bits) of the empirical distribution of `values`.
inline double shannon_entropy(std::vector<std::uint64_t> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double total = static_cast<double>(values.size());
  double h = 0.0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const double p = static_cast<double>(j - i) / total;
    h -= p * std::log2(p);
    i = j;
  }
  return h;
}

/// Dimensions ordered by ascending entropy of their pooled code words; ties
/// keep the lower dimension first.
inline DimOrder dimension_entropy_order(std::span<const Sequence> sequences, int dims) {
  std::array<double, kMaxDims> entropy{};
  for (int d = 0; d < dims; ++d) {
    std::vector<std::uint64_t> pooled;
    for (const Sequence& s : sequences)
      for (std::size_t p = 0; p + 1 < s.particle_count; ++p) pooled.push_back(s.word(p, d, dims));
    entropy[d] = shannon_entropy(std::move(pooled));
  }
  DimOrder order = identity_order();
  std::stable_sort(order.begin(), order.begin() + dims, [&](int a, int b) { return entropy[a] < entropy[b]; });
  return order;
}

/// R-index of one particle as a bit string: its code words concatenated in
/// `order`, first dimension most significant.
inline std::string rindex_bits(std::span<const std::uint64_t> words, std::span<const int> bit_widths,
                               std::span<const int> order) {
  std::string bits;
  for (int d : order)
    for (int i = bit_widths[d] - 1; i >= 0; --i) bits.push_back(((words[d] >> i) & 1u) ? '1' : '0');
  return bits;
}

/// Sorts a sequence's non-center particles by ascending R-index. Word widths
/// are fixed within a sequence, so comparing the concatenation equals
/// comparing words lexicographically in `order`.
inline void rindex_sort(Sequence& seq, const DimOrder& order, int dims) {
  const std::size_t coded = seq.particle_count - 1;
  if (coded < 2) return;
  std::vector<std::size_t> perm(coded);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    for (int k = 0; k < dims; ++k) {
      const int d = order[k];
      const std::uint64_t wa = seq.word(a, d, dims);
      const std::uint64_t wb = seq.word(b, d, dims);
      if (wa != wb) return wa < wb;
    }
    return false;
  });
  std::vector<std::uint64_t> payload(seq.payload.size());
  for (std::size_t i = 0; i < coded; ++i)
    std::copy_n(seq.payload.begin() + perm[i] * dims, dims, payload.begin() + i * dims);
  seq.payload = std::move(payload);
  if (seq.origin_ids.size() == seq.particle_count) {
    std::vector<ParticleId> ids(seq.origin_ids.size());
    ids[0] = seq.origin_ids[0];
    for (std::size_t i = 0; i < coded; ++i) ids[i + 1] = seq.origin_ids[perm[i] + 1];
    seq.origin_ids = std::move(ids);
  }
}

/// Applies sequence reordering and R-index sorting in place when enabled and
/// returns the dimension order to serialize with.
inline DimOrder arrange_for_layout(std::vector<Sequence>& sequences, bool reorder_enabled, int dims, int precision) {
  if (!reorder_enabled) return identity_order();
  reorder_sequences(sequences, dims, precision);
  const DimOrder order = dimension_entropy_order(sequences, dims);
  for (Sequence& s : sequences) rindex_sort(s, order, dims);
  return order;
}

}  // namespace pbbc
