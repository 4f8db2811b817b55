#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>

#include "pbbc/model.hpp"

namespace pbbc {

/// Width field value reserved for a dimension stored at source precision.
inline constexpr int kLosslessWidth = 63;

/// Largest width that is still quantized for a source precision M.
inline constexpr int max_quantized_width(int precision) { return precision < 62 ? precision : 62; }

/// Half-length of the predictable range covered by m bits: 2*eps*(2^(m-1) - 0.5).
inline double half_range_capacity(int m, double eps) {
  return 2.0 * eps * (std::ldexp(1.0, m - 1) - 0.5);
}

/// Box length l = 4*eps*(2^(m-1) - 0.5); zero for m = 0.
inline double box_length(int m, double eps) {
  if (m <= 0) return 0.0;
  return 4.0 * eps * (std::ldexp(1.0, m - 1) - 0.5);
}

/// Smallest m >= 0 whose predictable range covers `half` on each side.
inline int width_for_half_range(double half, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidEpsilon, "epsilon must be positive");
  if (!(half > 0.0)) return 0;
  const double estimate = std::ceil(std::log2(half / (2.0 * eps) + 0.5) + 1.0);
  int m = estimate > 0 ? static_cast<int>(std::min(estimate, 2048.0)) : 0;
  // The closed form can be off by one ulp-driven step; settle on the exact minimum.
  while (m > 0 && half_range_capacity(m - 1, eps) >= half) --m;
  while (half_range_capacity(m, eps) < half) ++m;
  return m;
}

using Widths = std::array<int, kMaxDims>;

/// Per-dimension bit widths for predicting every point of `aabb` from `center`.
inline Widths compute_widths(const Point& center, const Aabb& aabb, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidEpsilon, "epsilon must be positive");
  Widths widths{};
  for (int d = 0; d < aabb.dims; ++d) {
    const double half = std::max(center[d] - aabb.lo[d], aabb.hi[d] - center[d]);
    widths[d] = width_for_half_range(half, eps);
  }
  return widths;
}

/// Index of the particle nearest (Euclidean) to the AABB center; ties to the smaller id.
inline ParticleId select_center(std::span<const ParticleId> ids, const ParticleSet& particles) {
  if (ids.empty()) throw Error(ErrorCode::EmptySelection, "select_center on empty subregion");
  const Point target = compute_aabb(ids, particles).center();
  ParticleId best = ids.front();
  double best_dist = std::numeric_limits<double>::infinity();
  for (ParticleId id : ids) {
    double dist = 0;
    for (int d = 0; d < particles.dims(); ++d) {
      const double delta = particles.coord(id, d) - target[d];
      dist += delta * delta;
    }
    if (dist < best_dist || (dist == best_dist && id < best)) {
      best = id;
      best_dist = dist;
    }
  }
  return best;
}

// Quantization codes. With m bits there are 2^m - 1 intervals of width
// 2*eps; the center interval has code 2^(m-1) - 1 and codes run 0..2^m - 2.

inline std::int64_t code_offset(int m) { return m <= 0 ? 0 : (std::int64_t{1} << (m - 1)) - 1; }

inline std::uint64_t max_code(int m) { return m <= 0 ? 0 : (std::uint64_t{1} << m) - 2; }

inline double dequantize(std::uint64_t code, double center, int m, double eps) {
  if (code > max_code(m)) throw Error(ErrorCode::CodeOutOfRange, "quantization code exceeds its width");
  const std::int64_t k = static_cast<std::int64_t>(code) - code_offset(m);
  return center + (2.0 * eps) * static_cast<double>(k);
}

/// Nearest interval offset with ties toward zero, clamped to the code range.
inline std::int64_t interval_offset(double v, double center, int m, double eps) {
  if (m <= 0) return 0;
  const double q = (v - center) / (2.0 * eps);
  double k = std::round(q);
  if (std::fabs(q - std::trunc(q)) == 0.5) k = std::trunc(q);
  const double limit = static_cast<double>(code_offset(m));
  k = std::clamp(k, -limit, limit);
  return static_cast<std::int64_t>(k);
}

/// Code whose reconstruction (in decoder arithmetic) lies within eps of v,
/// or nothing when v is outside the predictable range or rounding rules out
/// every candidate.
inline std::optional<std::uint64_t> try_quantize(double v, double center, int m, double eps) {
  if (std::fabs(v - center) > half_range_capacity(m, eps)) return std::nullopt;
  const std::int64_t k = interval_offset(v, center, m, eps);
  const std::int64_t limit = code_offset(m);
  for (std::int64_t candidate : {k, k - 1, k + 1}) {
    if (candidate < -limit || candidate > limit) continue;
    const auto code = static_cast<std::uint64_t>(candidate + limit);
    if (std::fabs(v - dequantize(code, center, m, eps)) <= eps) return code;
  }
  return std::nullopt;
}

inline std::uint64_t quantize(double v, double center, int m, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidEpsilon, "epsilon must be positive");
  if (auto code = try_quantize(v, center, m, eps)) return *code;
  throw Error(ErrorCode::OutOfRange, "value outside the predictable range of its box");
}

/// Quantization descriptor of one subregion.
struct BitBox {
  ParticleId center_particle_id = 0;
  Point center{};
  Widths widths{};
  std::array<double, kMaxDims> lengths{};
  Aabb extent;
  std::uint8_t lossless_mask = 0;

  bool lossless(int d) const { return (lossless_mask >> d) & 1u; }

  /// Width as written to the 6-bit field: m_d, or the lossless sentinel.
  int field_width(int d) const { return lossless(d) ? kLosslessWidth : widths[d]; }
};

/// Flags dimensions whose width exceeds what the source precision can quantize.
inline std::uint8_t lossless_dims(const Widths& widths, int dims, int precision) {
  std::uint8_t mask = 0;
  for (int d = 0; d < dims; ++d)
    if (widths[d] > max_quantized_width(precision)) mask |= static_cast<std::uint8_t>(1u << d);
  return mask;
}

/// Greedy selection key: bits per particle, lossless dimensions weighted M + 1.
inline int selection_key(const BitBox& box, int dims, int precision) {
  int key = 0;
  for (int d = 0; d < dims; ++d) key += box.lossless(d) ? precision + 1 : box.widths[d];
  return key;
}

/// Builds the bit box of a subregion around the given center particle.
inline BitBox make_bit_box(std::span<const ParticleId> ids, ParticleId center_id, const ParticleSet& particles,
                           double eps) {
  const int dims = particles.dims();
  const Aabb aabb = compute_aabb(ids, particles);
  BitBox box;
  box.center_particle_id = center_id;
  box.center = particles.point(center_id);
  box.widths = compute_widths(box.center, aabb, eps);
  box.lossless_mask = lossless_dims(box.widths, dims, particles.precision());
  box.extent.dims = dims;
  for (int d = 0; d < dims; ++d) {
    box.lengths[d] = box_length(box.widths[d], eps);
    const double half = half_range_capacity(box.widths[d], eps);
    box.extent.lo[d] = std::min(box.center[d] - half, aabb.lo[d]);
    box.extent.hi[d] = std::max(box.center[d] + half, aabb.hi[d]);
  }
  return box;
}

inline BitBox make_bit_box(std::span<const ParticleId> ids, const ParticleSet& particles, double eps) {
  return make_bit_box(ids, select_center(ids, particles), particles, eps);
}

}  // namespace pbbc
