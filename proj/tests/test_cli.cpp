#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "pbbc_cli.hpp"
#include "support.hpp"

using namespace pbbc;
using pbbc::testing::TempDir;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pbbc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const TempDir& dir, const std::string& kind = "clusters", std::size_t n = 5000) {
  const std::string path = (dir / ("in_" + kind)).string();
  const auto r = run_cli({"generate", "--kind", kind, "-n", std::to_string(n), "--seed", "3", "-o", path});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, CompressDecompressVerify) {
  TempDir dir;
  const std::string in = fixture(dir);
  const std::string box = (dir / "c.pbbc").string();
  auto r = run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "--sidecar", "-o", box});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["num_particles"], 5000);
  EXPECT_GT(j["compression_ratio"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(j["r_ratio"].get<double>(), 1.0);  // 6000 / 5000 clamps to 1

  r = run_cli({"verify", in, "--layout", "interleaved", "--container", box});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(nlohmann::json::parse(r.out)["pass"].get<bool>());

  const std::string out = (dir / "out").string();
  r = run_cli({"decompress", box, "-o", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recon = read_raw(std::filesystem::path(out), 64, 3, RawLayout::Interleaved);
  EXPECT_EQ(recon.size(), 5000u);
}

TEST(Cli, PlanarSplitFilesAndCsv) {
  TempDir dir;
  const auto ps = generate_synthetic(SyntheticKind::Shell, 300, 2, 1);
  const std::vector<std::filesystem::path> split{dir / "x", dir / "y"};
  write_raw(ps, split, RawLayout::Planar, 64);
  const std::string box = (dir / "c").string();
  auto r = run_cli({"compress", split[0].string(), split[1].string(), "--dims", "2", "--precision", "64",
                    "--abs-eps", "0.001", "--sidecar", "-o", box});
  ASSERT_EQ(r.code, 0) << r.err;
  {
    std::ofstream f(dir / "p.csv");
    f << "x,y\n";
    for (std::size_t i = 0; i < ps.size(); ++i) f << ps.coord(i, 0) << "," << ps.coord(i, 1) << "\n";
  }
  r = run_cli({"compress", (dir / "p.csv").string(), "--layout", "csv", "--precision", "64", "--rel-eps", "1e-3",
               "-o", box});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST(Cli, UsageErrors) {
  TempDir dir;
  const std::string in = fixture(dir, "uniform", 100);
  const std::string box = (dir / "c").string();
  EXPECT_EQ(run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "0", "-o", box}).code, 2);
  EXPECT_EQ(run_cli({"compress", in, "--layout", "interleaved", "-o", box}).code, 2);
  EXPECT_EQ(run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "--r-ratio", "2", "-o", box}).code,
            2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"compress", (dir / "nope").string(), "--rel-eps", "1e-3", "-o", box}).code, 3);
}

TEST(Cli, DegenerateInput) {
  TempDir dir;
  write_raw(ParticleSet({1, 1, 1}, 3, 64), dir / "one", RawLayout::Interleaved, 32);
  const auto r = run_cli({"compress", (dir / "one").string(), "--layout", "interleaved", "--rel-eps", "1e-3", "-o",
                          (dir / "c").string()});
  EXPECT_EQ(r.code, 4);
}

TEST(Cli, CorruptContainer) {
  TempDir dir;
  const std::string in = fixture(dir, "uniform", 2000);
  const std::string box = (dir / "c").string();
  ASSERT_EQ(run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "--sidecar", "-o", box}).code, 0);
  auto bytes = read_file(box);
  auto bad = bytes;
  bad[1] = 'Z';
  write_file(dir / "bad", bad);
  EXPECT_EQ(run_cli({"decompress", (dir / "bad").string(), "-o", (dir / "o").string()}).code, 5);

  // Without the sidecar there is nothing to pair against.
  const std::string plain = (dir / "plain").string();
  ASSERT_EQ(run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "-o", plain}).code, 0);
  EXPECT_EQ(run_cli({"verify", in, "--layout", "interleaved", "--container", plain}).code, 2);
}

TEST(Cli, VerifyFlagsBoundViolation) {
  TempDir dir;
  const std::string in = fixture(dir, "uniform", 2000);
  const std::string box = (dir / "c").string();
  ASSERT_EQ(run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "--sidecar", "-o", box}).code, 0);
  // Verify against a shifted copy of the original.
  auto ps = read_raw(std::filesystem::path(in), 32, 3, RawLayout::Interleaved);
  std::vector<double> coords(ps.coords().begin(), ps.coords().end());
  coords[0] = static_cast<double>(static_cast<float>(coords[0] + 0.01));
  write_raw(ParticleSet(coords, 3, 32), dir / "moved", RawLayout::Interleaved, 32);
  EXPECT_EQ(run_cli({"verify", (dir / "moved").string(), "--layout", "interleaved", "--container", box}).code, 6);
}

TEST(Cli, SweepRowsAreMonotoneAndBounded) {
  TempDir dir;
  const std::string in = fixture(dir, "clusters", 20000);
  const std::string csv = (dir / "s.csv").string();
  auto r = run_cli({"sweep", in, "--layout", "interleaved", "--rel-eps-list", "1e-5,1e-4,1e-3,1e-2", "--r-ratio-list",
                    "0.01", "--csv", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream f(csv);
  std::stringstream text;
  text << f.rdbuf();
  const auto rows = parse_csv(text.str());
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(text.str().substr(0, text.str().find('\n')), cli::kSweepCsvHeader);
  double prev_ratio = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 12u);
    EXPECT_EQ(rows[i][2], "ok");
    const double xi = std::stod(rows[i][0]);
    const double ratio = std::stod(rows[i][3]);
    const double psnr_db = std::stod(rows[i][6]);
    EXPECT_GE(ratio, prev_ratio);
    EXPECT_GE(psnr_db, -20 * std::log10(xi));
    prev_ratio = ratio;
  }

  // A single-pair sweep reports the same ratio as compress.
  r = run_cli({"sweep", in, "--layout", "interleaved", "--rel-eps-list", "1e-3", "--r-ratio-list", "0.01"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto one = parse_csv(r.out);
  r = run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "--r-ratio", "0.01", "-o",
               (dir / "c").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const double compress_ratio = nlohmann::json::parse(r.out)["compression_ratio"].get<double>();
  EXPECT_NEAR(std::stod(one[1][3]), compress_ratio, 1e-6 * compress_ratio);
}

TEST(Cli, SweepReportsFailedRuns) {
  TempDir dir;
  write_raw(ParticleSet({1, 1, 1, 1, 1, 1}, 3, 64), dir / "flat", RawLayout::Interleaved, 32);
  const auto r = run_cli({"sweep", (dir / "flat").string(), "--layout", "interleaved", "--rel-eps-list", "1e-3"});
  ASSERT_EQ(r.code, 0);
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1][2], "failed");
}

TEST(Cli, BackendFromEnvironment) {
  TempDir dir;
  const std::string in = fixture(dir, "uniform", 1000);
  ::setenv("PBBC_BACKEND", "store", 1);
  auto r = run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "-o", (dir / "c").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["backend"], "store");
  ::setenv("PBBC_BACKEND", "lz4", 1);
  r = run_cli({"compress", in, "--layout", "interleaved", "--rel-eps", "1e-3", "-o", (dir / "c").string()});
  EXPECT_EQ(r.code, 2);
  ::unsetenv("PBBC_BACKEND");
}
