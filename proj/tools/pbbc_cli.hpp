#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "pbbc/pbbc.hpp"

namespace pbbc::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDegenerate = 4;
inline constexpr int kExitCorrupt = 5;
inline constexpr int kExitBoundViolation = 6;

/// Subregion size the default r-ratio aims for.
inline constexpr double kDefaultLeafParticles = 6000.0;

inline double default_r_ratio(std::size_t n) {
  return std::clamp(kDefaultLeafParticles / static_cast<double>(n), 1e-12, 1.0);
}

/// Frozen column order of sweep CSV output.
inline constexpr const char* kSweepCsvHeader =
    "xi,r_ratio,status,compression_ratio,bpp,nrmse,psnr,compress_seconds,decompress_seconds,max_abs_error,n_seq,"
    "initial_boxes";

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::SizeMismatch:
      return kExitIo;
    case ErrorCode::DegenerateRange:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::EmptySelection:
      return kExitDegenerate;
    case ErrorCode::CorruptContainer:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::CodeOutOfRange:
    case ErrorCode::BackendMismatch:
      return kExitCorrupt;
    default:
      return kExitUsage;
  }
}

struct InputSpec {
  std::vector<std::string> paths;
  int dims = 3;
  int precision = 32;
  std::string layout = "planar";

  void add_options(CLI::App& cmd) {
    cmd.add_option("input", paths, "raw file(s): one file, or one per dimension for planar input")->required();
    cmd.add_option("--dims", dims, "dimensions (2 or 3)")->check(CLI::IsMember({2, 3}));
    cmd.add_option("--precision", precision, "source precision in bits")->check(CLI::IsMember({32, 64}));
    cmd.add_option("--layout", layout, "planar, interleaved or csv")
        ->check(CLI::IsMember({"planar", "interleaved", "csv"}));
  }

  ParticleSet load() const {
    if (layout == "csv") {
      if (paths.size() != 1) throw Error(ErrorCode::InvalidArgument, "csv input takes one file");
      return read_csv(paths[0], precision);
    }
    std::vector<std::filesystem::path> p(paths.begin(), paths.end());
    return read_raw(p, precision, dims, layout == "planar" ? RawLayout::Planar : RawLayout::Interleaved);
  }
};

struct RunResult {
  CompressionOutput compressed;
  DecompressionOutput decompressed;
  MetricsReport metrics;
  VerifyReport check;
};

/// Compresses with a sidecar, decompresses, and measures against the original.
inline RunResult evaluate(const ParticleSet& particles, CompressorConfig config, Backend backend,
                          bool count_sidecar) {
  config.emit_permutation_sidecar = true;
  RunResult run;
  run.compressed = compress(particles, config, backend);
  run.decompressed = decompress(run.compressed.bytes);
  const auto& sidecar = *run.decompressed.sidecar;
  run.check = verify(particles, run.decompressed.particles, sidecar, run.compressed.header.epsilon);
  const std::size_t stored = run.compressed.bytes.size() - (count_sidecar ? 0 : run.compressed.sidecar_bytes);
  const auto rb = ratio_and_bpp(original_bytes(particles.size(), particles.dims(), particles.precision()), stored,
                                particles.size());
  MetricsReport& m = run.metrics;
  m.dims = particles.dims();
  m.nrmse = nrmse(particles, run.decompressed.particles, sidecar, run.compressed.header.delta_max);
  m.psnr = psnr(m.nrmse);
  m.compression_ratio = rb.compression_ratio;
  m.bpp = rb.bpp;
  m.max_abs_error = run.check.max_abs_error;
  m.compress_seconds = run.compressed.seconds;
  m.decompress_seconds = run.decompressed.seconds;
  return run;
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad list value '" + item + "'");
    }
  }
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty value list");
  return values;
}

inline std::string format_csv_real(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

/// Runs the command line; streams are parameters so tests can capture them.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Error-bounded lossy compressor for particle positions (bit-box reduction)", "pbbc"};
  app.require_subcommand(1);

  // compress
  auto* compress_cmd = app.add_subcommand("compress", "compress a particle file into a container");
  InputSpec compress_in;
  compress_in.add_options(*compress_cmd);
  std::optional<double> abs_eps;
  std::optional<double> rel_eps;
  std::optional<double> r_ratio;
  bool no_reorder = false;
  bool sidecar = false;
  bool count_sidecar = false;
  std::string compress_out;
  auto* abs_opt = compress_cmd->add_option("--abs-eps", abs_eps, "absolute error bound");
  auto* rel_opt = compress_cmd->add_option("--rel-eps", rel_eps, "error bound relative to the largest coordinate range");
  abs_opt->excludes(rel_opt);
  compress_cmd->add_option("--r-ratio", r_ratio, "max subregion size as a fraction of N, in (0,1]");
  compress_cmd->add_flag("--no-reorder", no_reorder, "disable sequence and R-index reordering");
  compress_cmd->add_flag("--sidecar", sidecar, "store the permutation to original particle order");
  compress_cmd->add_flag("--count-sidecar", count_sidecar, "include the sidecar in ratio and bpp");
  compress_cmd->add_option("-o,--output", compress_out, "container path")->required();

  // decompress
  auto* decompress_cmd = app.add_subcommand("decompress", "reconstruct particles from a container");
  std::string container_in;
  std::vector<std::string> decompress_out;
  std::string out_layout = "interleaved";
  int out_precision = 64;
  decompress_cmd->add_option("container", container_in, "container path")->required();
  decompress_cmd->add_option("-o,--output", decompress_out, "output file, or one per dimension (planar)")->required();
  decompress_cmd->add_option("--layout", out_layout, "planar or interleaved")
      ->check(CLI::IsMember({"planar", "interleaved"}));
  decompress_cmd->add_option("--precision", out_precision, "output precision in bits")
      ->check(CLI::IsMember({32, 64}));

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "check a container against the original particles");
  InputSpec verify_in;
  verify_in.add_options(*verify_cmd);
  std::string verify_container;
  verify_cmd->add_option("--container", verify_container, "container path")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "rate-distortion sweep over relative bounds and r-ratios");
  InputSpec sweep_in;
  sweep_in.add_options(*sweep_cmd);
  std::string eps_list;
  std::string ratio_list;
  std::string csv_out;
  bool sweep_no_reorder = false;
  bool sweep_count_sidecar = false;
  sweep_cmd->add_option("--rel-eps-list", eps_list, "comma-separated relative bounds")->required();
  sweep_cmd->add_option("--r-ratio-list", ratio_list, "comma-separated r-ratios (default: automatic)");
  sweep_cmd->add_option("--csv", csv_out, "CSV output path (stdout if omitted)");
  sweep_cmd->add_flag("--no-reorder", sweep_no_reorder, "disable reordering");
  sweep_cmd->add_flag("--count-sidecar", sweep_count_sidecar, "include the sidecar in ratio and bpp");

  // generate
  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic particle fixture");
  std::string kind = "clusters";
  std::size_t gen_n = 10000;
  int gen_dims = 3;
  std::uint64_t seed = 1;
  SyntheticOptions gen_options;
  gen_options.precision = 32;  // matches the input default of the other subcommands
  std::string gen_layout = "interleaved";
  std::string gen_out;
  generate_cmd->add_option("--kind", kind, "uniform, clusters or shell")
      ->check(CLI::IsMember({"uniform", "clusters", "shell"}));
  generate_cmd->add_option("-n,--count", gen_n, "number of particles")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--dims", gen_dims, "dimensions")->check(CLI::IsMember({2, 3}));
  generate_cmd->add_option("--seed", seed, "random seed");
  generate_cmd->add_option("--clusters", gen_options.clusters, "cluster count")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--spread", gen_options.spread, "cluster standard deviation");
  generate_cmd->add_option("--precision", gen_options.precision, "precision in bits")->check(CLI::IsMember({32, 64}));
  generate_cmd->add_option("--layout", gen_layout, "planar or interleaved")
      ->check(CLI::IsMember({"planar", "interleaved"}));
  generate_cmd->add_option("-o,--output", gen_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  Backend backend = kDefaultBackend;
  try {
    backend = backend_from_env();
  } catch (const Error& e) {
    err << "error: PBBC_BACKEND: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (compress_cmd->parsed()) {
      if (abs_eps.has_value() == rel_eps.has_value()) {
        err << "error: exactly one of --abs-eps or --rel-eps is required\n";
        return kExitUsage;
      }
      const double bound = abs_eps ? *abs_eps : *rel_eps;
      if (!(bound > 0.0)) {
        err << "error: the error bound must be positive\n";
        return kExitUsage;
      }
      if (r_ratio && !(*r_ratio > 0.0 && *r_ratio <= 1.0)) {
        err << "error: --r-ratio must lie in (0, 1]\n";
        return kExitUsage;
      }
      const ParticleSet particles = compress_in.load();
      CompressorConfig config;
      config.error_bound = abs_eps ? ErrorBoundSpec::absolute(bound) : ErrorBoundSpec::relative(bound);
      config.r_ratio = r_ratio.value_or(default_r_ratio(particles.size()));
      config.reorder_enabled = !no_reorder;
      config.emit_permutation_sidecar = sidecar;
      const CompressionOutput result = compress(particles, config, backend);
      write_file(compress_out, result.bytes);
      const std::size_t stored = result.bytes.size() - (count_sidecar ? 0 : result.sidecar_bytes);
      const auto rb = ratio_and_bpp(original_bytes(particles.size(), particles.dims(), particles.precision()),
                                    stored, particles.size());
      nlohmann::json j;
      j["num_particles"] = particles.size();
      j["epsilon"] = result.header.epsilon;
      j["delta_max"] = result.header.delta_max;
      j["r_ratio"] = config.r_ratio;
      j["leaf_capacity"] = result.leaf_capacity;
      j["initial_boxes"] = result.trace.initial_boxes;
      j["n_seq"] = result.trace.n_seq;
      j["container_bytes"] = result.bytes.size();
      j["sidecar_bytes"] = result.sidecar_bytes;
      j["compression_ratio"] = rb.compression_ratio;
      j["bpp"] = rb.bpp;
      j["compress_seconds"] = result.seconds;
      j["backend"] = std::string(backend_name(backend));
      out << j.dump() << "\n";
      err << "compressed " << particles.size() << " particles into " << result.bytes.size() << " bytes (ratio "
          << rb.compression_ratio << ", " << rb.bpp << " bpp, " << result.trace.n_seq << " sequences)\n";
      return kExitOk;
    }

    if (decompress_cmd->parsed()) {
      const auto bytes = read_file(container_in);
      const DecompressionOutput result = decompress(bytes);
      std::vector<std::filesystem::path> paths(decompress_out.begin(), decompress_out.end());
      write_raw(result.particles, paths, out_layout == "planar" ? RawLayout::Planar : RawLayout::Interleaved,
                out_precision);
      const ContainerHeader& h = result.header;
      nlohmann::json j;
      j["num_particles"] = h.num_particles;
      j["dims"] = h.dims;
      j["source_precision"] = h.precision;
      j["output_precision"] = out_precision;
      j["epsilon"] = h.epsilon;
      j["delta_max"] = h.delta_max;
      j["r_ratio"] = h.r_ratio;
      j["n_seq"] = h.n_seq;
      j["backend"] = std::string(backend_name(h.backend));
      j["has_sidecar"] = h.has_sidecar;
      j["decompress_seconds"] = result.seconds;
      out << j.dump() << "\n";
      err << "decompressed " << h.num_particles << " particles (eps " << h.epsilon << ")\n";
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      const ParticleSet original = verify_in.load();
      const auto bytes = read_file(verify_container);
      const DecompressionOutput result = decompress(bytes);
      if (!result.sidecar) {
        err << "error: container has no sidecar; compress with --sidecar to verify\n";
        return kExitUsage;
      }
      const VerifyReport report = verify(original, result.particles, *result.sidecar, result.header.epsilon);
      MetricsReport m;
      m.dims = original.dims();
      m.nrmse = nrmse(original, result.particles, *result.sidecar, result.header.delta_max);
      m.psnr = psnr(m.nrmse);
      const auto rb = ratio_and_bpp(original_bytes(original.size(), original.dims(), original.precision()),
                                    bytes.size() - sidecar_section_bytes(bytes), original.size());
      m.compression_ratio = rb.compression_ratio;
      m.bpp = rb.bpp;
      m.max_abs_error = report.max_abs_error;
      m.decompress_seconds = result.seconds;
      nlohmann::json j = to_json(m);
      j["epsilon"] = report.epsilon;
      j["pass"] = report.pass;
      out << j.dump() << "\n";
      if (!report.pass) {
        err << "bound violated: particle " << report.worst_original_index << " dim " << report.worst_dim
            << " error " << report.max_error << " > eps " << report.epsilon << "\n";
        return kExitBoundViolation;
      }
      err << "verify passed: max error " << report.max_error << " <= eps " << report.epsilon << "\n";
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      const auto xis = parse_list(eps_list);
      for (double xi : xis)
        if (!(xi > 0.0)) throw Error(ErrorCode::InvalidBound, "relative bounds must be positive");
      const ParticleSet particles = sweep_in.load();
      const auto ratios =
          ratio_list.empty() ? std::vector<double>{default_r_ratio(particles.size())} : parse_list(ratio_list);
      std::ostringstream csv;
      csv << kSweepCsvHeader << "\n";
      for (double xi : xis) {
        for (double rr : ratios) {
          csv << format_csv_real(xi) << "," << format_csv_real(rr) << ",";
          try {
            CompressorConfig config;
            config.error_bound = ErrorBoundSpec::relative(xi);
            config.r_ratio = rr;
            config.reorder_enabled = !sweep_no_reorder;
            const RunResult run = evaluate(particles, config, backend, sweep_count_sidecar);
            const MetricsReport& m = run.metrics;
            csv << (run.check.pass ? "ok" : "bound_violation") << "," << format_csv_real(m.compression_ratio) << ","
                << format_csv_real(m.bpp) << "," << format_csv_real(m.nrmse) << "," << format_csv_real(m.psnr)
                << "," << format_csv_real(m.compress_seconds) << "," << format_csv_real(m.decompress_seconds)
                << "," << format_csv_real(run.check.max_error) << "," << run.compressed.trace.n_seq << ","
                << run.compressed.trace.initial_boxes << "\n";
          } catch (const Error& e) {
            err << "run xi=" << xi << " r_ratio=" << rr << " failed: " << e.what() << "\n";
            csv << "failed,,,,,,,,,\n";
          }
        }
      }
      if (csv_out.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(csv_out, std::ios::trunc);
        if (!f) throw Error(ErrorCode::Io, "cannot create " + csv_out);
        f << csv.str();
      }
      return kExitOk;
    }

    if (generate_cmd->parsed()) {
      const SyntheticKind k = kind == "uniform"  ? SyntheticKind::Uniform
                              : kind == "shell" ? SyntheticKind::Shell
                                                : SyntheticKind::GaussianClusters;
      const ParticleSet particles = generate_synthetic(k, gen_n, gen_dims, seed, gen_options);
      write_raw(particles, std::filesystem::path(gen_out),
                gen_layout == "planar" ? RawLayout::Planar : RawLayout::Interleaved, gen_options.precision);
      err << "wrote " << gen_n << " particles to " << gen_out << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}

}  // namespace pbbc::cli
