#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pbbc {

inline constexpr int kMaxDims = 3;

using ParticleId = std::uint32_t;
using Point = std::array<double, kMaxDims>;

enum class ErrorCode {
  InvalidArgument,
  InvalidBound,
  DegenerateRange,
  EmptySelection,
  InvalidEpsilon,
  OutOfRange,
  CodeOutOfRange,
  MissingLeafBox,
  NoLiveBoxes,
  WidthOverflow,
  BackendMismatch,
  CorruptContainer,
  TruncatedPayload,
  MissingSidecar,
  MismatchedCounts,
  SizeMismatch,
  NonFiniteValue,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidBound: return "InvalidBound";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::CodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::MissingLeafBox: return "MissingLeafBox";
    case ErrorCode::NoLiveBoxes: return "NoLiveBoxes";
    case ErrorCode::WidthOverflow: return "WidthOverflow";
    case ErrorCode::BackendMismatch: return "BackendMismatch";
    case ErrorCode::CorruptContainer: return "CorruptContainer";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::MissingSidecar: return "MissingSidecar";
    case ErrorCode::MismatchedCounts: return "MismatchedCounts";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Exception type for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Immutable set of N particle positions in D dimensions.
///
/// Coordinates are held as doubles regardless of the source precision; for
/// 32-bit sources every value is exactly representable as a float, so
/// loading and storing never alters coordinate bits.
class ParticleSet {
 public:
  ParticleSet() = default;

  ParticleSet(std::vector<double> coords, int dims, int precision)
      : coords_(std::move(coords)), dims_(dims), precision_(precision) {
    if (dims_ < 2 || dims_ > kMaxDims)
      throw Error(ErrorCode::InvalidArgument, "dims must be 2 or 3");
    if (precision_ != 32 && precision_ != 64)
      throw Error(ErrorCode::InvalidArgument, "precision must be 32 or 64");
    if (coords_.size() % static_cast<std::size_t>(dims_) != 0)
      throw Error(ErrorCode::SizeMismatch, "coordinate count is not a multiple of dims");
    for (double v : coords_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite coordinate");
      if (precision_ == 32 && static_cast<double>(static_cast<float>(v)) != v)
        throw Error(ErrorCode::InvalidArgument, "coordinate not representable at 32-bit precision");
    }
    if (coords_.size() / static_cast<std::size_t>(dims_) > 0xFFFFFFFFull)
      throw Error(ErrorCode::InvalidArgument, "too many particles");
  }

  std::size_t size() const noexcept { return dims_ ? coords_.size() / dims_ : 0; }
  bool empty() const noexcept { return coords_.empty(); }
  int dims() const noexcept { return dims_; }
  int precision() const noexcept { return precision_; }

  double coord(std::size_t i, int d) const { return coords_[i * dims_ + d]; }

  Point point(std::size_t i) const {
    Point p{};
    for (int d = 0; d < dims_; ++d) p[d] = coords_[i * dims_ + d];
    return p;
  }

  std::span<const double> coords() const noexcept { return coords_; }

 private:
  std::vector<double> coords_;
  int dims_ = 3;
  int precision_ = 64;
};

/// Axis-aligned bounding box with closed intervals.
struct Aabb {
  int dims = 3;
  Point lo{};
  Point hi{};

  static Aabb of_point(const Point& p, int dims) {
    Aabb box;
    box.dims = dims;
    box.lo = p;
    box.hi = p;
    return box;
  }

  void expand(const Point& p) {
    for (int d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }

  void expand(const Aabb& other) {
    for (int d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], other.lo[d]);
      hi[d] = std::max(hi[d], other.hi[d]);
    }
  }

  bool contains(const Point& p) const {
    for (int d = 0; d < dims; ++d)
      if (p[d] < lo[d] || p[d] > hi[d]) return false;
    return true;
  }

  bool contains(const Aabb& other) const {
    for (int d = 0; d < dims; ++d)
      if (other.lo[d] < lo[d] || other.hi[d] > hi[d]) return false;
    return true;
  }

  bool intersects(const Aabb& other) const {
    for (int d = 0; d < dims; ++d)
      if (other.hi[d] < lo[d] || other.lo[d] > hi[d]) return false;
    return true;
  }

  Point center() const {
    Point c{};
    for (int d = 0; d < dims; ++d) c[d] = lo[d] + (hi[d] - lo[d]) / 2;
    return c;
  }

  double max_extent() const {
    double m = 0;
    for (int d = 0; d < dims; ++d) m = std::max(m, hi[d] - lo[d]);
    return m;
  }

  friend bool operator==(const Aabb& a, const Aabb& b) {
    if (a.dims != b.dims) return false;
    for (int d = 0; d < a.dims; ++d)
      if (a.lo[d] != b.lo[d] || a.hi[d] != b.hi[d]) return false;
    return true;
  }
};

struct ErrorBoundSpec {
  enum class Mode { Absolute, Relative };
  Mode mode = Mode::Relative;
  double value = 1e-3;

  static ErrorBoundSpec absolute(double eps) { return {Mode::Absolute, eps}; }
  static ErrorBoundSpec relative(double xi) { return {Mode::Relative, xi}; }
};

struct CompressorConfig {
  ErrorBoundSpec error_bound;
  double r_ratio = 1e-2;
  bool reorder_enabled = true;
  bool emit_permutation_sidecar = false;
};

/// Maximum subregion size r = max(1, ceil(r_ratio * N)).
inline std::size_t leaf_capacity(double r_ratio, std::size_t num_particles) {
  if (!(r_ratio > 0.0) || r_ratio > 1.0)
    throw Error(ErrorCode::InvalidArgument, "r_ratio must lie in (0, 1]");
  const double r = std::ceil(r_ratio * static_cast<double>(num_particles));
  return std::max<std::size_t>(1, static_cast<std::size_t>(r));
}

inline Aabb compute_aabb(std::span<const ParticleId> indices, const ParticleSet& particles) {
  if (indices.empty()) throw Error(ErrorCode::EmptySelection, "compute_aabb on empty selection");
  Aabb box = Aabb::of_point(particles.point(indices.front()), particles.dims());
  for (ParticleId id : indices.subspan(1)) box.expand(particles.point(id));
  return box;
}

inline Aabb compute_aabb(const ParticleSet& particles) {
  if (particles.empty()) throw Error(ErrorCode::EmptySelection, "compute_aabb on empty set");
  Aabb box = Aabb::of_point(particles.point(0), particles.dims());
  for (std::size_t i = 1; i < particles.size(); ++i) box.expand(particles.point(i));
  return box;
}

/// Largest coordinate range over all dimensions of the global AABB.
inline double max_range(const ParticleSet& particles) {
  return compute_aabb(particles).max_extent();
}

/// Turns an absolute or relative bound into an absolute epsilon in dataset units.
inline double resolve_error_bound(const ErrorBoundSpec& spec, const ParticleSet& particles) {
  if (!(spec.value > 0.0) || !std::isfinite(spec.value))
    throw Error(ErrorCode::InvalidBound, "error bound must be positive");
  if (particles.empty()) throw Error(ErrorCode::EmptySelection, "no particles");
  if (spec.mode == ErrorBoundSpec::Mode::Absolute) return spec.value;
  const double range = max_range(particles);
  if (!(range > 0.0))
    throw Error(ErrorCode::DegenerateRange, "relative bound needs a non-zero coordinate range");
  const double eps = spec.value * range;
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidBound, "resolved epsilon underflows");
  return eps;
}

}  // namespace pbbc
