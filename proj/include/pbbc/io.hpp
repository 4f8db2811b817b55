#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pbbc/model.hpp"

namespace pbbc {

enum class RawLayout { Planar, Interleaved };

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace detail {

inline double load_scalar(const std::uint8_t* p, int precision) {
  if (precision == 32) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= std::uint32_t{p[i]} << (8 * i);
    return static_cast<double>(std::bit_cast<float>(bits));
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{p[i]} << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void store_scalar(std::vector<std::uint8_t>& out, double v, int precision) {
  if (precision == 32) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    return;
  }
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline void check_format(int precision, int dims) {
  if (precision != 32 && precision != 64) throw Error(ErrorCode::InvalidArgument, "precision must be 32 or 64");
  if (dims < 2 || dims > kMaxDims) throw Error(ErrorCode::InvalidArgument, "dims must be 2 or 3");
}

}  // namespace detail

/// Loads little-endian raw scalars. Planar input is either one file per
/// dimension or one file holding all x, then all y (then all z); interleaved
/// input is a single x,y,z,x,y,z,... file.
inline ParticleSet read_raw(std::span<const std::filesystem::path> paths, int precision, int dims,
                            RawLayout layout) {
  detail::check_format(precision, dims);
  const std::size_t scalar = static_cast<std::size_t>(precision / 8);
  std::vector<std::vector<std::uint8_t>> files;
  for (const auto& p : paths) files.push_back(read_file(p));

  std::size_t n = 0;
  if (layout == RawLayout::Interleaved || files.size() == 1) {
    if (files.size() != 1) throw Error(ErrorCode::InvalidArgument, "expected a single input file");
    const std::size_t record = scalar * dims;
    if (files[0].size() % record != 0)
      throw Error(ErrorCode::SizeMismatch, "file size is not a multiple of " + std::to_string(record) + " bytes");
    n = files[0].size() / record;
  } else {
    if (files.size() != static_cast<std::size_t>(dims))
      throw Error(ErrorCode::InvalidArgument, "planar input needs one file or one file per dimension");
    for (const auto& f : files) {
      if (f.size() % scalar != 0 || f.size() != files[0].size())
        throw Error(ErrorCode::SizeMismatch, "per-dimension files differ in length");
    }
    n = files[0].size() / scalar;
  }

  std::vector<double> coords(n * dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < dims; ++d) {
      const std::uint8_t* src = nullptr;
      if (layout == RawLayout::Interleaved)
        src = files[0].data() + (i * dims + d) * scalar;
      else if (files.size() == 1)
        src = files[0].data() + (d * n + i) * scalar;
      else
        src = files[d].data() + i * scalar;
      coords[i * dims + d] = detail::load_scalar(src, precision);
    }
  }
  return ParticleSet(std::move(coords), dims, precision);
}

inline ParticleSet read_raw(const std::filesystem::path& path, int precision, int dims, RawLayout layout) {
  return read_raw(std::span(&path, 1), precision, dims, layout);
}

/// Inverse of read_raw: one path (planar concatenated or interleaved) or
/// one path per dimension (planar).
inline void write_raw(const ParticleSet& particles, std::span<const std::filesystem::path> paths, RawLayout layout,
                      int precision) {
  if (particles.empty()) throw Error(ErrorCode::EmptySelection, "refusing to write an empty particle set");
  const int dims = particles.dims();
  detail::check_format(precision, dims);
  const std::size_t n = particles.size();
  if (layout == RawLayout::Interleaved || paths.size() == 1) {
    if (paths.size() != 1) throw Error(ErrorCode::InvalidArgument, "expected a single output file");
    std::vector<std::uint8_t> out;
    out.reserve(n * dims * (precision / 8));
    if (layout == RawLayout::Interleaved) {
      for (double v : particles.coords()) detail::store_scalar(out, v, precision);
    } else {
      for (int d = 0; d < dims; ++d)
        for (std::size_t i = 0; i < n; ++i) detail::store_scalar(out, particles.coord(i, d), precision);
    }
    write_file(paths[0], out);
    return;
  }
  if (paths.size() != static_cast<std::size_t>(dims))
    throw Error(ErrorCode::InvalidArgument, "planar output needs one file or one file per dimension");
  for (int d = 0; d < dims; ++d) {
    std::vector<std::uint8_t> out;
    out.reserve(n * (precision / 8));
    for (std::size_t i = 0; i < n; ++i) detail::store_scalar(out, particles.coord(i, d), precision);
    write_file(paths[d], out);
  }
}

inline void write_raw(const ParticleSet& particles, const std::filesystem::path& path, RawLayout layout,
                      int precision) {
  write_raw(particles, std::span(&path, 1), layout, precision);
}

/// Reads a CSV with header `x,y` or `x,y,z`.
inline ParticleSet read_csv(const std::filesystem::path& path, int precision = 64) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::SizeMismatch, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int dims = 0;
  if (line == "x,y") dims = 2;
  else if (line == "x,y,z") dims = 3;
  else throw Error(ErrorCode::InvalidArgument, "CSV header must be x,y or x,y,z");

  std::vector<double> coords;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream row(line);
    std::string cell;
    int count = 0;
    while (std::getline(row, cell, ',')) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "unparsable CSV value '" + cell + "'");
      }
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite CSV value");
      if (precision == 32) v = static_cast<double>(static_cast<float>(v));
      coords.push_back(v);
      ++count;
    }
    if (count != dims) throw Error(ErrorCode::SizeMismatch, "CSV row with " + std::to_string(count) + " columns");
  }
  return ParticleSet(std::move(coords), dims, precision);
}

enum class SyntheticKind { Uniform, GaussianClusters, Shell };

struct SyntheticOptions {
  int clusters = 8;
  double spread = 0.02;
  int precision = 64;
};

/// Deterministic test fixtures. Uniform fills [0,1]^D; gaussian clusters
/// draws isotropic blobs around centers in [0.1,0.9]^D; shell scatters points
/// on a thin sphere (circle for D=2) of radius 0.4 around 0.5.
inline ParticleSet generate_synthetic(SyntheticKind kind, std::size_t n, int dims, std::uint64_t seed,
                                      const SyntheticOptions& options = {}) {
  if (n == 0) throw Error(ErrorCode::EmptySelection, "synthetic set needs at least one particle");
  detail::check_format(options.precision, dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> coords;
  coords.reserve(n * dims);

  std::vector<Point> centers;
  if (kind == SyntheticKind::GaussianClusters) {
    if (options.clusters < 1) throw Error(ErrorCode::InvalidArgument, "need at least one cluster");
    for (int k = 0; k < options.clusters; ++k) {
      Point c{};
      for (int d = 0; d < dims; ++d) c[d] = 0.1 + 0.8 * unit(rng);
      centers.push_back(c);
    }
  }
  std::uniform_int_distribution<int> pick(0, std::max(0, options.clusters - 1));

  for (std::size_t i = 0; i < n; ++i) {
    Point p{};
    switch (kind) {
      case SyntheticKind::Uniform:
        for (int d = 0; d < dims; ++d) p[d] = unit(rng);
        break;
      case SyntheticKind::GaussianClusters: {
        const Point& c = centers[pick(rng)];
        for (int d = 0; d < dims; ++d) p[d] = c[d] + options.spread * normal(rng);
        break;
      }
      case SyntheticKind::Shell: {
        double norm = 0;
        for (int d = 0; d < dims; ++d) {
          p[d] = normal(rng);
          norm += p[d] * p[d];
        }
        norm = std::sqrt(norm);
        if (norm == 0) norm = 1, p[0] = 1;
        const double radius = 0.4 + 0.01 * normal(rng);
        for (int d = 0; d < dims; ++d) p[d] = 0.5 + radius * p[d] / norm;
        break;
      }
    }
    for (int d = 0; d < dims; ++d) {
      const double v = options.precision == 32 ? static_cast<double>(static_cast<float>(p[d])) : p[d];
      coords.push_back(v);
    }
  }
  return ParticleSet(std::move(coords), dims, options.precision);
}

}  // namespace pbbc
