#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbbc/container.hpp"
#include "pbbc/layout.hpp"

namespace pbbc {

struct DecompressionOutput {
  /// Reconstructed positions in sequence order, each sequence's center
  /// first. Values are exact 64-bit reconstructions, so the set is tagged
  /// with precision 64; the source precision is in `header`.
  ParticleSet particles;
  std::optional<std::vector<ParticleId>> sidecar;
  ContainerHeader header;
  double seconds = 0.0;
};

/// Dequantizes parsed sequences into a flat particle set.
inline ParticleSet reconstruct(std::span<const Sequence> sequences, const ContainerHeader& header) {
  const int dims = header.dims;
  const double eps = header.epsilon;
  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(header.num_particles) * dims);
  for (const Sequence& s : sequences) {
    for (int d = 0; d < dims; ++d) coords.push_back(s.center[d]);
    for (std::size_t p = 0; p + 1 < s.particle_count; ++p) {
      for (int d = 0; d < dims; ++d) {
        const std::uint64_t word = s.word(p, d, dims);
        if (s.widths[d] == kLosslessWidth)
          coords.push_back(decode_raw(word, header.precision));
        else
          coords.push_back(dequantize(word, s.center[d], s.widths[d], eps));
      }
    }
  }
  return ParticleSet(std::move(coords), dims, 64);
}

inline DecompressionOutput decompress(std::span<const std::uint8_t> bytes) {
  const auto start = std::chrono::steady_clock::now();
  CompressedContainer c = read_container(bytes);
  const ContainerHeader& h = c.header;
  const auto layout = huffman_decode(c.table, c.huffman_payload, c.huffman_bits, c.layout_bytes);
  const auto sequences = parse_layout(layout, c.layout_bits, h.n_seq, {h.dims, h.precision, h.dim_order});

  std::uint64_t total = 0;
  for (const Sequence& s : sequences) total += s.particle_count;
  if (total != h.num_particles)
    throw Error(ErrorCode::CorruptContainer, "sequence particle total disagrees with header N");
  for (const Sequence& s : sequences)
    for (int d = 0; d < h.dims; ++d)
      if (s.widths[d] != kLosslessWidth && s.widths[d] > max_quantized_width(h.precision))
        throw Error(ErrorCode::CorruptContainer, "width exceeds source precision");

  DecompressionOutput out;
  out.particles = reconstruct(sequences, h);
  out.sidecar = std::move(c.sidecar);
  out.header = h;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline constexpr double kBoundSlack = 0x1p-40;

struct VerifyReport {
  std::array<double, kMaxDims> max_abs_error{};
  double max_error = 0.0;
  std::size_t worst_original_index = 0;
  int worst_dim = 0;
  double epsilon = 0.0;
  bool pass = true;
};

/// Compares reconstructed[j] with original[sidecar[j]] for every j.
inline VerifyReport verify(const ParticleSet& original, const ParticleSet& reconstructed,
                           std::span<const ParticleId> sidecar, double eps, double slack = kBoundSlack) {
  if (sidecar.empty() && !original.empty()) throw Error(ErrorCode::MissingSidecar, "verification needs the sidecar");
  if (original.size() != reconstructed.size() || sidecar.size() != original.size() ||
      original.dims() != reconstructed.dims())
    throw Error(ErrorCode::MismatchedCounts, "original and reconstruction differ in size");
  std::vector<bool> seen(original.size(), false);
  VerifyReport report;
  report.epsilon = eps;
  for (std::size_t j = 0; j < sidecar.size(); ++j) {
    const ParticleId i = sidecar[j];
    if (i >= original.size() || seen[i]) throw Error(ErrorCode::MismatchedCounts, "sidecar is not a permutation");
    seen[i] = true;
    for (int d = 0; d < original.dims(); ++d) {
      const double err = std::fabs(original.coord(i, d) - reconstructed.coord(j, d));
      report.max_abs_error[d] = std::max(report.max_abs_error[d], err);
      if (err > report.max_error) {
        report.max_error = err;
        report.worst_original_index = i;
        report.worst_dim = d;
      }
    }
  }
  report.pass = report.max_error <= eps * (1.0 + slack);
  return report;
}

}  // namespace pbbc
