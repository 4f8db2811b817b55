#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "pbbc/compressor.hpp"
#include "pbbc/container.hpp"
#include "pbbc/huffman.hpp"
#include "pbbc/io.hpp"
#include "pbbc/layout.hpp"
#include "support.hpp"

using namespace pbbc;

namespace {

Sequence random_sequence(std::mt19937_64& rng, int dims, int precision, std::uint32_t max_count = 40) {
  Sequence s;
  s.particle_count = 1 + static_cast<std::uint32_t>(rng() % max_count);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int d = 0; d < dims; ++d) {
    s.center[d] = precision == 32 ? static_cast<double>(static_cast<float>(u(rng))) : u(rng);
    const int roll = static_cast<int>(rng() % 10);
    s.widths[d] = roll == 0 ? kLosslessWidth : static_cast<int>(rng() % (std::min(precision, 62) + 1));
  }
  for (std::uint32_t p = 1; p < s.particle_count; ++p) {
    for (int d = 0; d < dims; ++d) {
      const int w = s.widths[d];
      if (w == kLosslessWidth) {
        s.payload.push_back(encode_raw(u(rng), precision));
      } else {
        s.payload.push_back(w == 0 ? 0 : rng() % (max_code(w) + 1));
      }
    }
  }
  for (std::uint32_t p = 0; p < s.particle_count; ++p) s.origin_ids.push_back(p);
  return s;
}

// Big-endian bit string of the words in `order`, built one bit at a time.
std::string oracle_rindex(const Sequence& s, std::size_t p, const DimOrder& order, int dims, int precision) {
  std::string bits;
  for (int k = 0; k < dims; ++k) {
    const int d = order[k];
    const int w = field_bits(s.widths[d], precision);
    const std::uint64_t word = s.word(p, d, dims);
    for (int b = w - 1; b >= 0; --b) bits += std::to_string((word >> b) & 1u);
  }
  return bits;
}

DimOrder random_order(std::mt19937_64& rng, int dims) {
  DimOrder o = identity_order();
  std::shuffle(o.begin(), o.begin() + dims, rng);
  return o;
}

Sequence with_widths(std::array<int, 3> widths, std::uint32_t count) {
  Sequence s;
  s.widths = widths;
  s.particle_count = count;
  s.payload.assign((count - 1) * 3, 0);
  return s;
}

}  // namespace

TEST(LayoutAccounting, WorkedExample) {
  const std::vector<Sequence> seqs{with_widths({12, 2, 8}, 10)};
  const LayoutAccounting acc = account_layout(seqs, 3, 32);
  EXPECT_EQ(acc.centers_bits, 96u);
  EXPECT_EQ(acc.width_fields_bits, 18u);
  EXPECT_EQ(acc.codes_bits, 198u);
  EXPECT_EQ(acc.terminator_bits, 32u);
  const auto layout = serialize_layout(seqs, {3, 32, identity_order()});
  EXPECT_EQ(layout.bit_length, 96u + 18 + 198 + 32);
  EXPECT_EQ(layout.accounting, acc);
}

TEST(LayoutAccounting, ZeroWidthAddsNoCodeBits) {
  const std::vector<Sequence> seqs{with_widths({0, 0, 0}, 50)};
  EXPECT_EQ(account_layout(seqs, 3, 64).codes_bits, 0u);
  EXPECT_EQ(serialize_layout(seqs, {3, 64, identity_order()}).bit_length, 3u * 64 + 18 + 32);
}

TEST(LayoutAccounting, RandomListsAreExact) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int dims = 2 + trial % 2;
    const int precision = trial % 3 ? 64 : 32;
    std::vector<Sequence> seqs;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) seqs.push_back(random_sequence(rng, dims, precision));
    std::uint64_t expected = 0;
    for (const auto& s : seqs) {
      expected += static_cast<std::uint64_t>(dims) * precision + 6ull * dims + 32;
      for (int d = 0; d < dims; ++d)
        expected += static_cast<std::uint64_t>(s.widths[d] == 63 ? precision : s.widths[d]) * (s.particle_count - 1);
    }
    const auto layout = serialize_layout(seqs, {dims, precision, random_order(rng, dims)});
    EXPECT_EQ(layout.bit_length, expected);
    EXPECT_EQ(account_layout(seqs, dims, precision).total(), expected);
    EXPECT_EQ(layout.accounting.total(), expected);
    EXPECT_EQ(layout.bytes.size(), (expected + 7) / 8);
  }
}

TEST(Layout, WidthOverflowRejected) {
  std::vector<Sequence> seqs{with_widths({12, 2, 8}, 1)};
  seqs[0].widths[1] = 64;
  try {
    serialize_layout(seqs, {3, 64, identity_order()});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WidthOverflow);
  }
}

TEST(Layout, ParseInvertsSerialize) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const int dims = 2 + trial % 2;
    const int precision = trial % 2 ? 64 : 32;
    std::vector<Sequence> seqs;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) seqs.push_back(random_sequence(rng, dims, precision));
    const LayoutParams params{dims, precision, random_order(rng, dims)};
    const auto layout = serialize_layout(seqs, params);
    auto parsed = parse_layout(layout.bytes, layout.bit_length, seqs.size(), params);
    ASSERT_EQ(parsed.size(), seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      parsed[i].origin_ids = seqs[i].origin_ids;
      EXPECT_EQ(parsed[i], seqs[i]);
    }
  }
}

TEST(Layout, ParseRejectsTruncationAndTrailingBits) {
  std::mt19937_64 rng(43);
  std::vector<Sequence> seqs{random_sequence(rng, 3, 64, 100), random_sequence(rng, 3, 64, 100)};
  const LayoutParams params{3, 64, identity_order()};
  const auto layout = serialize_layout(seqs, params);
  EXPECT_THROW(parse_layout(layout.bytes, layout.bit_length - 1, 2, params), Error);
  EXPECT_THROW(parse_layout(layout.bytes, layout.bit_length, 1, params), Error);
  EXPECT_THROW(parse_layout(layout.bytes, layout.bit_length, 3, params), Error);
}

TEST(Reorder, SortsByBitsPerParticle) {
  std::vector<Sequence> seqs{with_widths({10, 6, 6}, 2), with_widths({3, 2, 2}, 2), with_widths({5, 4, 4}, 2)};
  reorder_sequences(seqs, 3, 32);
  EXPECT_EQ(bits_per_particle(seqs[0], 3, 32), 7);
  EXPECT_EQ(bits_per_particle(seqs[1], 3, 32), 13);
  EXPECT_EQ(bits_per_particle(seqs[2], 3, 32), 22);
}

TEST(Reorder, LosslessCountsAtSourcePrecision) {
  std::vector<Sequence> seqs{with_widths({63, 0, 0}, 2), with_widths({30, 2, 0}, 2)};
  reorder_sequences(seqs, 3, 32);
  EXPECT_EQ(seqs[0].widths[0], 63);  // 32 bits < 32 + 2
  reorder_sequences(seqs, 3, 64);
  EXPECT_EQ(seqs[0].widths[0], 30);
}

TEST(Reorder, StableAgainstInsertionSortOracle) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Sequence> seqs;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      Sequence s = with_widths({static_cast<int>(rng() % 4), static_cast<int>(rng() % 3), 0}, 1);
      s.center[0] = i;  // tag with the input position
      seqs.push_back(s);
    }
    auto expected = seqs;
    for (std::size_t i = 1; i < expected.size(); ++i)
      for (std::size_t j = i; j > 0 && bits_per_particle(expected[j - 1], 3, 32) > bits_per_particle(expected[j], 3, 32); --j)
        std::swap(expected[j - 1], expected[j]);
    reorder_sequences(seqs, 3, 32);
    ASSERT_EQ(seqs, expected);
  }
}

TEST(DimensionOrder, ConstantDimensionFirst) {
  Sequence s = with_widths({4, 4, 4}, 9);
  for (std::size_t p = 0; p < 8; ++p) {
    s.payload[p * 3 + 0] = p;      // 3 bits of entropy
    s.payload[p * 3 + 1] = 5;      // constant
    s.payload[p * 3 + 2] = p % 2;  // 1 bit
  }
  const std::vector<Sequence> seqs{s};
  EXPECT_EQ(dimension_entropy_order(seqs, 3), (DimOrder{1, 2, 0}));
}

TEST(DimensionOrder, SpreadOfCodesDecidesOrder) {
  // x uniform over 3 values, y over 8, z peaked on one value.
  std::mt19937_64 rng(45);
  Sequence s = with_widths({4, 4, 4}, 4001);
  for (std::size_t p = 0; p < 4000; ++p) {
    s.payload[p * 3 + 0] = 2 + rng() % 3;
    s.payload[p * 3 + 1] = 2 + rng() % 8;
    s.payload[p * 3 + 2] = rng() % 20 == 0 ? 3 + rng() % 3 : 7;
  }
  const std::vector<Sequence> seqs{s};
  EXPECT_EQ(dimension_entropy_order(seqs, 3), (DimOrder{2, 0, 1}));
}

TEST(DimensionOrder, TiesKeepLowerDimension) {
  Sequence s = with_widths({4, 4, 4}, 5);
  for (std::size_t p = 0; p < 4; ++p) s.payload[p * 3 + 0] = s.payload[p * 3 + 1] = s.payload[p * 3 + 2] = p;
  const std::vector<Sequence> seqs{s};
  EXPECT_EQ(dimension_entropy_order(seqs, 3), (DimOrder{0, 1, 2}));
  EXPECT_DOUBLE_EQ(shannon_entropy({1, 2, 3, 4}), 2.0);
  EXPECT_DOUBLE_EQ(shannon_entropy({7, 7, 7}), 0.0);
}

TEST(RIndex, WorkedExample) {
  // x = 01 (2 bits), y = 100111 (6 bits), z = 01010 (5 bits), order (x, z, y).
  const std::array<std::uint64_t, 3> words{0b01, 0b100111, 0b01010};
  const std::array<int, 3> widths{2, 6, 5};
  const std::array<int, 3> order{0, 2, 1};
  EXPECT_EQ(rindex_bits(words, widths, order), "0101010100111");
}

TEST(RIndex, SingleCodedParticleUnchanged) {
  Sequence s = with_widths({3, 3, 3}, 2);
  s.payload = {5, 1, 2};
  s.origin_ids = {9, 4};
  const Sequence before = s;
  rindex_sort(s, {2, 1, 0}, 3);
  EXPECT_EQ(s, before);
}

TEST(RIndex, SortMatchesBitStringOracle) {
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 300; ++trial) {
    const int dims = 2 + trial % 2;
    const int precision = trial % 2 ? 32 : 64;
    Sequence s = random_sequence(rng, dims, precision, 60);
    const DimOrder order = random_order(rng, dims);
    // Pair every particle's key with its origin id, sorted stably by key.
    std::vector<std::pair<std::string, ParticleId>> expected;
    for (std::size_t p = 0; p + 1 < s.particle_count; ++p)
      expected.emplace_back(oracle_rindex(s, p, order, dims, precision), s.origin_ids[p + 1]);
    std::stable_sort(expected.begin(), expected.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto center_id = s.origin_ids[0];
    rindex_sort(s, order, dims);
    ASSERT_EQ(s.origin_ids[0], center_id);
    for (std::size_t p = 0; p + 1 < s.particle_count; ++p) {
      ASSERT_EQ(oracle_rindex(s, p, order, dims, precision), expected[p].first);
      ASSERT_EQ(s.origin_ids[p + 1], expected[p].second);
    }
  }
}

TEST(Huffman, SingleSymbolInput) {
  const std::vector<std::uint8_t> data(1000, 0x42);
  const auto coded = huffman_encode(data);
  EXPECT_EQ(coded.bit_length, 1000u);
  EXPECT_EQ(huffman_decode(coded.table, coded.bits, coded.bit_length, coded.symbol_count), data);
}

TEST(Huffman, Abracadabra) {
  const std::string text = "abracadabra";
  const std::vector<std::uint8_t> data(text.begin(), text.end());
  const auto coded = huffman_encode(data);
  // Optimal code: a=1 bit, others 3 bits (or equivalent), 23 bits total.
  EXPECT_LE(coded.bit_length, 88u);
  EXPECT_EQ(coded.bit_length, 23u);
  EXPECT_EQ(huffman_decode(coded.table, coded.bits, coded.bit_length, coded.symbol_count), data);
}

TEST(Huffman, RandomAndSkewedRoundTrip) {
  std::mt19937_64 rng(47);
  std::vector<std::uint8_t> data(64 * 1024);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  auto coded = huffman_encode(data);
  EXPECT_EQ(huffman_decode(coded.table, coded.bits, coded.bit_length, coded.symbol_count), data);

  // Fibonacci frequencies push an unconstrained tree past the length cap.
  data.clear();
  std::uint64_t a = 1, b = 1;
  for (int s = 0; s < 40; ++s) {
    data.insert(data.end(), static_cast<std::size_t>(std::min<std::uint64_t>(a, 200000)), static_cast<std::uint8_t>(s));
    std::tie(a, b) = std::pair(b, a + b);
  }
  std::shuffle(data.begin(), data.end(), rng);
  coded = huffman_encode(data);
  for (auto len : coded.table.lengths) EXPECT_LE(len, kMaxHuffmanLength);
  EXPECT_EQ(huffman_decode(coded.table, coded.bits, coded.bit_length, coded.symbol_count), data);
}

TEST(Huffman, EmptyInput) {
  const auto coded = huffman_encode({});
  EXPECT_EQ(coded.bit_length, 0u);
  EXPECT_TRUE(huffman_decode(coded.table, coded.bits, 0, 0).empty());
}

TEST(Backend, StoreIsIdentity) {
  const std::vector<std::uint8_t> data{1, 2, 3, 250};
  EXPECT_EQ(backend_compress(Backend::Store, data), data);
  EXPECT_EQ(backend_decompress(Backend::Store, data, data.size()), data);
}

TEST(Backend, DeflateRoundTripAndRedundancy) {
  std::mt19937_64 rng(48);
  std::vector<std::uint8_t> data(100000);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng());
  EXPECT_EQ(backend_decompress(Backend::Deflate, backend_compress(Backend::Deflate, data), data.size()), data);
  std::vector<std::uint8_t> pattern;
  for (int i = 0; i < 20000; ++i) pattern.push_back(static_cast<std::uint8_t>(i % 7));
  EXPECT_LT(backend_compress(Backend::Deflate, pattern).size(), pattern.size() / 10);
}

TEST(Backend, UnknownIdRejected) {
  try {
    backend_from_id(9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendMismatch);
  }
  EXPECT_EQ(parse_backend("store"), Backend::Store);
  EXPECT_EQ(parse_backend("1"), Backend::Deflate);
  EXPECT_THROW(parse_backend("zstd-ish"), Error);
}

TEST(Container, HeaderRoundTrip) {
  ContainerHeader h;
  h.dims = 2;
  h.precision = 32;
  h.num_particles = 12345;
  h.epsilon = 0.125;
  h.delta_max = 7.5;
  h.r_ratio = 0.01;
  h.n_seq = 17;
  h.sequences_reordered = true;
  h.rindex_sorted = true;
  h.has_sidecar = true;
  h.backend = Backend::Store;
  h.dim_order = {1, 0, 2};
  const auto bytes = encode_header(h);
  ASSERT_EQ(bytes.size(), kFixedHeaderBytes);
  EXPECT_EQ(bytes[0], 'P');
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[52], 0xFF);
  EXPECT_EQ(decode_header(bytes), h);
}

TEST(Container, CorruptHeaderRejected) {
  const auto ps = generate_synthetic(SyntheticKind::Uniform, 500, 3, 1);
  CompressorConfig config;
  config.error_bound = ErrorBoundSpec::relative(1e-3);
  const auto out = compress(ps, config);
  auto expect_corrupt = [](std::vector<std::uint8_t> bytes) {
    try {
      read_container(bytes);
      ADD_FAILURE() << "accepted a corrupt container";
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::CorruptContainer || e.code() == ErrorCode::TruncatedPayload ||
                  e.code() == ErrorCode::BackendMismatch);
    }
  };
  auto bad = out.bytes;
  bad[0] = 'X';
  expect_corrupt(bad);
  bad = out.bytes;
  bad[4] = 2;  // version
  expect_corrupt(bad);
  bad = out.bytes;
  bad[20] ^= 0x10;  // epsilon bit, caught by the CRC
  expect_corrupt(bad);
  expect_corrupt(std::vector<std::uint8_t>(out.bytes.begin(), out.bytes.end() - 3));
  bad = out.bytes;
  bad.push_back(0);
  expect_corrupt(bad);
}

TEST(Compressor, DeterministicBytes) {
  const auto ps = generate_synthetic(SyntheticKind::GaussianClusters, 5000, 3, 2);
  CompressorConfig config;
  config.error_bound = ErrorBoundSpec::relative(1e-3);
  config.emit_permutation_sidecar = true;
  EXPECT_EQ(compress(ps, config).bytes, compress(ps, config).bytes);
}

TEST(Compressor, ReorderingNeverChangesLayoutLength) {
  for (auto kind : {SyntheticKind::Uniform, SyntheticKind::GaussianClusters, SyntheticKind::Shell}) {
    const auto ps = generate_synthetic(kind, 8000, 3, 3);
    CompressorConfig config;
    config.error_bound = ErrorBoundSpec::relative(1e-3);
    config.r_ratio = 1e-2;
    const auto with = compress(ps, config);
    config.reorder_enabled = false;
    const auto without = compress(ps, config);
    EXPECT_EQ(with.accounting, without.accounting);
    EXPECT_TRUE(with.header.rindex_sorted);
    EXPECT_FALSE(without.header.sequences_reordered);
  }
}
