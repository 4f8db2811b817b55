#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include "pbbc/model.hpp"

namespace pbbc {

/// Pairwise (tree) summation; the result depends only on the input order.
template <class T>
T pairwise_sum(std::span<const T> values) {
  if (values.size() <= 8) {
    T sum{};
    for (const T& v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double nrmse(const ParticleSet& original, const ParticleSet& reconstructed,
                    std::span<const ParticleId> sidecar, double delta_max) {
  if (original.size() != reconstructed.size() || sidecar.size() != original.size() ||
      original.dims() != reconstructed.dims())
    throw Error(ErrorCode::MismatchedCounts, "nrmse needs matched sets");
  if (!(delta_max > 0.0)) throw Error(ErrorCode::DegenerateRange, "nrmse needs a positive range");
  if (original.empty()) return 0.0;
  const int dims = original.dims();
  std::vector<double> terms(original.size() * dims);
  for (std::size_t j = 0; j < sidecar.size(); ++j) {
    for (int d = 0; d < dims; ++d) {
      const double diff = (original.coord(sidecar[j], d) - reconstructed.coord(j, d)) / delta_max;
      terms[j * dims + d] = diff * diff;
    }
  }
  const double mean = pairwise_sum<double>(terms) / static_cast<double>(terms.size());
  return std::sqrt(mean);
}

inline double psnr(double nrmse_value) {
  if (nrmse_value == 0.0) return std::numeric_limits<double>::infinity();
  return -20.0 * std::log10(nrmse_value);
}

struct RatioAndBpp {
  double compression_ratio = 0.0;
  double bpp = 0.0;
};

inline RatioAndBpp ratio_and_bpp(std::uint64_t original_bytes, std::uint64_t container_bytes,
                                 std::uint64_t num_particles) {
  if (container_bytes == 0 || num_particles == 0)
    throw Error(ErrorCode::InvalidArgument, "ratio needs non-empty container and particle set");
  return {static_cast<double>(original_bytes) / static_cast<double>(container_bytes),
          8.0 * static_cast<double>(container_bytes) / static_cast<double>(num_particles)};
}

/// Raw size of a particle set at its source precision.
inline std::uint64_t original_bytes(std::uint64_t num_particles, int dims, int precision) {
  return num_particles * static_cast<std::uint64_t>(dims) * static_cast<std::uint64_t>(precision / 8);
}

struct MetricsReport {
  double nrmse = 0.0;
  double psnr = 0.0;
  double compression_ratio = 0.0;
  double bpp = 0.0;
  std::array<double, kMaxDims> max_abs_error{};
  int dims = 3;
  double compress_seconds = 0.0;
  double decompress_seconds = 0.0;
};

namespace detail {
inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace detail

/// Column order of to_csv_row; frozen.
inline constexpr const char* kMetricsCsvHeader =
    "nrmse,psnr,compression_ratio,bpp,max_abs_error_x,max_abs_error_y,max_abs_error_z,compress_seconds,"
    "decompress_seconds";

inline std::string to_csv_row(const MetricsReport& m) {
  std::string row = detail::format_real(m.nrmse) + "," + detail::format_real(m.psnr) + "," +
                    detail::format_real(m.compression_ratio) + "," + detail::format_real(m.bpp);
  for (int d = 0; d < kMaxDims; ++d) row += "," + (d < m.dims ? detail::format_real(m.max_abs_error[d]) : "");
  row += "," + detail::format_real(m.compress_seconds) + "," + detail::format_real(m.decompress_seconds);
  return row;
}

inline nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["nrmse"] = m.nrmse;
  // JSON has no infinity; an exact reconstruction reports "inf".
  if (std::isinf(m.psnr))
    j["psnr"] = "inf";
  else
    j["psnr"] = m.psnr;
  j["compression_ratio"] = m.compression_ratio;
  j["bpp"] = m.bpp;
  j["max_abs_error"] = std::vector<double>(m.max_abs_error.begin(), m.max_abs_error.begin() + m.dims);
  j["compress_seconds"] = m.compress_seconds;
  j["decompress_seconds"] = m.decompress_seconds;
  return j;
}

inline std::string to_json_line(const MetricsReport& m) { return to_json(m).dump(); }

}  // namespace pbbc
