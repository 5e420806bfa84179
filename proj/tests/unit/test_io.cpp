#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include <doctest.h>

#include "gkdv/io.hpp"

using namespace gkdv;
namespace fs = std::filesystem;

namespace
{

struct TempDir
{
  fs::path path;
  TempDir()
  {
    path = fs::temp_directory_path() / ("gkdv_io_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path &p)
{
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("format_real round-trips doubles")
{
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k)
  {
    const double v = dist(rng) * std::pow(10.0, static_cast<int>(k % 40) - 20);
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("profile files round-trip exactly")
{
  TempDir tmp;
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  SolitonProfile prof;
  prof.model = ModelSpec::kdv_k22();
  prof.amplitude = 1.5;
  prof.lambda = 2.1666213;
  prof.mode = BoundaryMode::Robin;
  prof.residual_norm = 3.2e-13;
  prof.iterations = 7;
  prof.xi = Eigen::VectorXd::LinSpaced(141, 0.0, 14.0);
  prof.values = Eigen::VectorXd::NullaryExpr(141, [&] { return dist(rng); });
  prof.values(0) = 1.5;

  const fs::path csv = tmp.path / "p" / "profile.csv";
  fs::create_directories(csv.parent_path());
  write_profile(prof, csv);
  CHECK(fs::exists(sidecar_path(csv)));
  CHECK(slurp(csv).rfind("# gkdv-profile v1\nxi,f\n", 0) == 0);

  for (const fs::path &source : {csv, csv.parent_path()})
  {
    const auto back = read_profile(source);
    CHECK(back.model == prof.model);
    CHECK(back.amplitude == prof.amplitude);
    CHECK(back.lambda == prof.lambda);
    CHECK(back.mode == prof.mode);
    CHECK(back.residual_norm == prof.residual_norm);
    CHECK(back.xi == prof.xi);
    CHECK(back.values == prof.values);
  }
}

TEST_CASE("malformed profile files are rejected")
{
  TempDir tmp;
  CHECK_THROWS_AS(read_profile(tmp.path / "missing.csv"), ValidationError);
  const fs::path csv = tmp.path / "bad.csv";
  std::ofstream(csv) << "# gkdv-profile v1\nxi,f\n0,1\nnot-a-number\n";
  std::ofstream(sidecar_path(csv)) << R"({"model":{"alpha":1,"m":2,"beta":0,"gamma":1,"n":2},"amplitude":1,"lambda":0.75,"h":1,"b":1,"mode":"dirichlet","residual_norm":0})";
  CHECK_THROWS_AS(read_profile(csv), ValidationError);
}

TEST_CASE("run directories round-trip")
{
  TempDir tmp;
  const auto grid = PeriodicGrid::from_spacing(-5, 5, 0.5);
  RunMetadata meta;
  meta.model = ModelSpec::mkdv_k33();
  meta.grid = grid;
  meta.config.dt = 0.01;
  meta.config.t_end = 0.02;
  meta.config.snapshot_stride = 1;
  meta.waves = {{2.0, -1.0, 5.14}, {-1.0, 2.0, 1.2}};
  const fs::path dir = tmp.path / "run";
  fs::create_directories(dir);
  RunWriter writer(dir, meta);
  std::vector<DiagnosticsRecord> diag;
  for (int k = 0; k < 3; ++k)
  {
    Snapshot s{0.01 * k, Eigen::VectorXd::LinSpaced(grid.points, -1.0 / 3, 2.0 / 7) * (k + 1)};
    writer.write_snapshot(grid, s);
    diag.push_back({s.t, 0.1 * k, 0.2 * k});
  }
  writer.write_diagnostics(diag);

  const RunData data = read_run(dir);
  CHECK(data.model == meta.model);
  CHECK(data.grid == grid);
  CHECK(data.dt == 0.01);
  REQUIRE(data.snapshots.size() == 3);
  CHECK(data.snapshots[2].u == Eigen::VectorXd::LinSpaced(grid.points, -1.0 / 3, 2.0 / 7) * 3);
  CHECK(data.snapshots[1].t == 0.01);
  REQUIRE(data.diagnostics.size() == 3);
  CHECK(data.diagnostics[2].momentum == 0.4);
  CHECK(data.initial_amplitudes == std::vector<double>{2.0, -1.0});
  CHECK(data.initial_centers == std::vector<double>{-1.0, 2.0});
  CHECK(read_run_metadata(dir).config.snapshot_stride == 1);
  CHECK_THROWS_AS(read_run(tmp.path / "nothing"), ValidationError);
}

TEST_CASE("output directories and manifests")
{
  TempDir tmp;
  const fs::path dir = tmp.path / "out";
  prepare_output_dir(dir, false);
  CHECK(fs::is_directory(dir));
  prepare_output_dir(dir, false); // empty is fine
  std::ofstream(dir / "x.txt") << "x";
  CHECK_THROWS_AS(prepare_output_dir(dir, false), ValidationError);
  prepare_output_dir(dir, true);
  CHECK(fs::is_empty(dir));

  RunManifest m{"soliton", {{"h", 0.25}}, {"in.csv"}, {"out.csv"}, 0.5};
  write_manifest(dir, m);
  const auto j = read_json(dir / "manifest.json");
  CHECK(j["command"] == "soliton");
  CHECK(j["parameters"]["h"] == 0.25);
  CHECK(j.contains("version"));
  CHECK_THROWS_AS(write_manifest(dir, m), ValidationError);
}

TEST_CASE("subnormal values survive a round trip")
{
  TempDir tmp;
  SolitonProfile prof;
  prof.model = ModelSpec::kdv_k22();
  prof.amplitude = 1.0;
  prof.lambda = 1.4;
  prof.mode = BoundaryMode::Robin;
  prof.xi = Eigen::VectorXd::LinSpaced(9, 0.0, 8.0);
  prof.values = Eigen::VectorXd::Zero(9);
  prof.values(0) = 1.0;
  prof.values(7) = 5.6551378816031069e-316;
  prof.values(8) = std::numeric_limits<double>::denorm_min();
  write_profile(prof, tmp.path / "profile.csv");
  CHECK(read_profile(tmp.path).values == prof.values);
}
