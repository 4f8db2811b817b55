#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "pbbc/container.hpp"
#include "pbbc/layout.hpp"
#include "pbbc/reducer.hpp"

namespace pbbc {

struct CompressionOutput {
  std::vector<std::uint8_t> bytes;
  ContainerHeader header;
  ReductionTrace trace;
  LayoutAccounting accounting;
  std::size_t leaf_capacity = 0;
  std::size_t sidecar_bytes = 0;
  double seconds = 0.0;
};

/// Full pipeline: reduction, reordering, layout, Huffman, lossless backend.
inline CompressionOutput compress(const ParticleSet& particles, const CompressorConfig& config,
                                  Backend backend = kDefaultBackend) {
  const auto start = std::chrono::steady_clock::now();
  const int dims = particles.dims();
  const int precision = particles.precision();

  ReductionResult reduced = compress_to_sequences(particles, config);
  const DimOrder order = arrange_for_layout(reduced.sequences, config.reorder_enabled, dims, precision);
  const SerializedLayout layout = serialize_layout(reduced.sequences, {dims, precision, order});
  HuffmanCoded coded = huffman_encode(layout.bytes);

  CompressedContainer container;
  ContainerHeader& h = container.header;
  h.dims = dims;
  h.precision = precision;
  h.num_particles = particles.size();
  h.epsilon = reduced.epsilon;
  h.delta_max = reduced.delta_max;
  h.r_ratio = config.r_ratio;
  h.n_seq = reduced.sequences.size();
  h.sequences_reordered = config.reorder_enabled;
  h.rindex_sorted = config.reorder_enabled;
  h.has_sidecar = config.emit_permutation_sidecar;
  h.backend = backend;
  h.dim_order = order;
  container.table = coded.table;
  container.layout_bits = layout.bit_length;
  container.layout_bytes = layout.bytes.size();
  container.huffman_bits = coded.bit_length;
  container.huffman_payload = std::move(coded.bits);
  if (config.emit_permutation_sidecar) {
    std::vector<ParticleId> sidecar;
    sidecar.reserve(particles.size());
    for (const Sequence& s : reduced.sequences) sidecar.insert(sidecar.end(), s.origin_ids.begin(), s.origin_ids.end());
    container.sidecar = std::move(sidecar);
  }

  CompressionOutput out;
  out.bytes = write_container(container);
  out.header = h;
  out.trace = std::move(reduced.trace);
  out.accounting = layout.accounting;
  out.leaf_capacity = reduced.leaf_capacity;
  out.sidecar_bytes = sidecar_section_bytes(out.bytes);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace pbbc
