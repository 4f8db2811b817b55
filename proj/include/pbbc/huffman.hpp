#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "pbbc/bitstream.hpp"

namespace pbbc {

inline constexpr int kMaxHuffmanLength = 24;

/// Canonical Huffman code over byte symbols, described by code lengths only.
struct HuffmanTable {
  std::array<std::uint8_t, 256> lengths{};

  friend bool operator==(const HuffmanTable&, const HuffmanTable&) = default;
};

struct HuffmanCoded {
  HuffmanTable table;
  std::vector<std::uint8_t> bits;
  std::uint64_t bit_length = 0;
  std::uint64_t symbol_count = 0;
};

namespace detail {

inline std::array<std::uint8_t, 256> huffman_lengths(const std::array<std::uint64_t, 256>& freq) {
  std::array<std::uint8_t, 256> lengths{};
  struct Item {
    std::uint64_t weight;
    int node;
    bool operator>(const Item& o) const { return weight != o.weight ? weight > o.weight : node > o.node; }
  };
  std::vector<int> parent;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  for (int s = 0; s < 256; ++s) {
    if (freq[s] == 0) continue;
    heap.push({freq[s], static_cast<int>(parent.size())});
    parent.push_back(-1);
  }
  const std::size_t leaves = parent.size();
  if (leaves == 0) return lengths;
  if (leaves == 1) {
    for (int s = 0; s < 256; ++s)
      if (freq[s]) lengths[s] = 1;
    return lengths;
  }
  while (heap.size() > 1) {
    const Item a = heap.top();
    heap.pop();
    const Item b = heap.top();
    heap.pop();
    const int node = static_cast<int>(parent.size());
    parent.push_back(-1);
    parent[a.node] = node;
    parent[b.node] = node;
    heap.push({a.weight + b.weight, node});
  }
  // Depth of each internal node, computed root-first (parents have larger indices).
  std::vector<int> depth(parent.size(), 0);
  for (int n = static_cast<int>(parent.size()) - 2; n >= 0; --n) depth[n] = depth[parent[n]] + 1;
  int leaf = 0;
  for (int s = 0; s < 256; ++s)
    if (freq[s]) lengths[s] = static_cast<std::uint8_t>(std::min(depth[leaf++], 255));
  return lengths;
}

struct CanonicalCodes {
  std::array<std::uint32_t, 256> codes{};
  std::array<int, kMaxHuffmanLength + 1> count{};
  std::vector<std::uint8_t> symbols;  // sorted by (length, symbol)
};

inline CanonicalCodes canonical_codes(const HuffmanTable& table) {
  CanonicalCodes cc;
  for (int s = 0; s < 256; ++s) {
    const int len = table.lengths[s];
    if (len == 0) continue;
    if (len > kMaxHuffmanLength) throw Error(ErrorCode::CorruptContainer, "Huffman code length too large");
    ++cc.count[len];
  }
  // Kraft inequality guards against tables that cannot be decoded.
  std::uint64_t kraft = 0;
  for (int len = 1; len <= kMaxHuffmanLength; ++len)
    kraft += static_cast<std::uint64_t>(cc.count[len]) << (kMaxHuffmanLength - len);
  if (kraft > (std::uint64_t{1} << kMaxHuffmanLength))
    throw Error(ErrorCode::CorruptContainer, "Huffman table violates the Kraft inequality");
  for (int len = 1; len <= kMaxHuffmanLength; ++len)
    for (int s = 0; s < 256; ++s)
      if (table.lengths[s] == len) cc.symbols.push_back(static_cast<std::uint8_t>(s));
  std::uint32_t code = 0;
  int prev_len = 0;
  for (std::uint8_t s : cc.symbols) {
    const int len = table.lengths[s];
    code <<= (len - prev_len);
    cc.codes[s] = code++;
    prev_len = len;
  }
  return cc;
}

}  // namespace detail

/// Length-limited code lengths for the byte histogram of `data`.
inline HuffmanTable build_huffman_table(std::span<const std::uint8_t> data) {
  std::array<std::uint64_t, 256> freq{};
  for (std::uint8_t b : data) ++freq[b];
  HuffmanTable table;
  for (;;) {
    table.lengths = detail::huffman_lengths(freq);
    const int longest = *std::max_element(table.lengths.begin(), table.lengths.end());
    if (longest <= kMaxHuffmanLength) return table;
    // Flatten the histogram until the tree is shallow enough.
    for (auto& f : freq)
      if (f) f = (f + 1) / 2;
  }
}

inline HuffmanCoded huffman_encode(std::span<const std::uint8_t> data) {
  HuffmanCoded out;
  out.table = build_huffman_table(data);
  out.symbol_count = data.size();
  if (data.empty()) return out;
  const auto cc = detail::canonical_codes(out.table);
  BitWriter writer;
  for (std::uint8_t b : data) writer.write(cc.codes[b], out.table.lengths[b]);
  out.bit_length = writer.bit_length();
  out.bits = writer.take();
  return out;
}

inline std::vector<std::uint8_t> huffman_decode(const HuffmanTable& table, std::span<const std::uint8_t> bits,
                                                std::uint64_t bit_length, std::uint64_t symbol_count) {
  std::vector<std::uint8_t> out;
  if (symbol_count == 0) return out;
  const auto cc = detail::canonical_codes(table);
  if (cc.symbols.empty()) throw Error(ErrorCode::CorruptContainer, "empty Huffman table for non-empty payload");
  if (symbol_count > bit_length) throw Error(ErrorCode::TruncatedPayload, "fewer bits than symbols");
  out.reserve(static_cast<std::size_t>(symbol_count));
  BitReader reader(bits, bit_length);
  for (std::uint64_t i = 0; i < symbol_count; ++i) {
    std::uint32_t code = 0;
    std::uint32_t first = 0;
    std::uint32_t index = 0;
    bool found = false;
    for (int len = 1; len <= kMaxHuffmanLength; ++len) {
      code |= reader.get_bit();
      const auto count = static_cast<std::uint32_t>(cc.count[len]);
      if (code - first < count) {
        out.push_back(cc.symbols[index + (code - first)]);
        found = true;
        break;
      }
      index += count;
      first = (first + count) << 1;
      code <<= 1;
    }
    if (!found) throw Error(ErrorCode::CorruptContainer, "invalid Huffman code");
  }
  return out;
}

}  // namespace pbbc
