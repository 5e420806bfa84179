#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <doctest.h>

#include "cli.hpp"
#include "gkdv/io.hpp"

using namespace gkdv;
namespace fs = std::filesystem;

namespace
{

const fs::path &scratch()
{
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / ("gkdv_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

struct Outcome
{
  int code;
  std::string out;
  std::string err;
};

Outcome gkdv_cmd(std::vector<std::string> args)
{
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p)
{
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string path(const std::string &name)
{
  return (scratch() / name).string();
}

double printed_lambda(const std::string &text)
{
  const auto pos = text.find("lambda = ");
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + 9));
}

struct Cleanup
{
  ~Cleanup() { fs::remove_all(scratch()); }
} cleanup;

} // namespace

TEST_CASE("usage errors exit with 1")
{
  CHECK(gkdv_cmd({}).code == cli::exit_validation);
  CHECK(gkdv_cmd({"bogus"}).code == cli::exit_validation);
  CHECK(gkdv_cmd({"soliton", "--amplitude"}).code == cli::exit_validation);
  CHECK(gkdv_cmd({"--help"}).code == cli::exit_ok);
}

TEST_CASE("soliton K(2,2) at two resolutions")
{
  auto coarse = gkdv_cmd({"soliton", "--alpha", "1", "--m", "2", "--beta", "0", "--gamma", "1", "--n", "2",
                          "--amplitude", "1", "--h", "0.25", "--b", "8", "--mode", "dirichlet", "--out",
                          path("s25")});
  REQUIRE(coarse.code == 0);
  const double l25 = printed_lambda(coarse.out);
  CHECK(l25 == doctest::Approx(0.75).epsilon(0.01));
  CHECK(fs::exists(path("s25") + "/profile.csv"));
  CHECK(fs::exists(path("s25") + "/profile.json"));
  CHECK(fs::exists(path("s25") + "/manifest.json"));

  auto fine = gkdv_cmd({"soliton", "--preset", "k22", "--amplitude", "1", "--h", "0.125", "--b", "8",
                        "--out", path("s125")});
  REQUIRE(fine.code == 0);
  const double ratio = std::abs(printed_lambda(fine.out) - 0.75) / std::abs(l25 - 0.75);
  CHECK(ratio == doctest::Approx(0.25).epsilon(0.2));
}

TEST_CASE("mode and model must agree")
{
  auto r = gkdv_cmd({"soliton", "--preset", "k22", "--mode", "robin", "--beta", "0", "--out", path("bad")});
  CHECK(r.code == cli::exit_validation);
  CHECK(r.err.find("mismatch") != std::string::npos);
}

TEST_CASE("newton failure exits with 2")
{
  auto r = gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.25", "--b", "8", "--max-iter", "1", "--out",
                     path("fail")});
  CHECK(r.code == cli::exit_numerical);
  CHECK(r.err.find("iterations") != std::string::npos);
}

TEST_CASE("identical commands give identical files")
{
  const std::vector<std::string> base{"soliton", "--preset", "k33", "--h", "0.25", "--b", "8", "--out"};
  auto a = base, b = base;
  a.push_back(path("det_a"));
  b.push_back(path("det_b"));
  REQUIRE(gkdv_cmd(a).code == 0);
  REQUIRE(gkdv_cmd(b).code == 0);
  CHECK(slurp(path("det_a") + "/profile.csv") == slurp(path("det_b") + "/profile.csv"));
  CHECK(slurp(path("det_a") + "/profile.json") == slurp(path("det_b") + "/profile.json"));
}

TEST_CASE("non-empty output directory needs --force")
{
  const std::vector<std::string> cmd{"soliton", "--preset", "k22", "--h", "0.25", "--b", "8", "--out",
                                     path("twice")};
  REQUIRE(gkdv_cmd(cmd).code == 0);
  CHECK(gkdv_cmd(cmd).code == cli::exit_validation);
  auto forced = cmd;
  forced.push_back("--force");
  CHECK(gkdv_cmd(forced).code == 0);
  // Exactly one manifest after the forced rerun.
  int manifests = 0;
  for (const auto &e : fs::directory_iterator(path("twice")))
    manifests += e.path().filename() == "manifest.json";
  CHECK(manifests == 1);
}

TEST_CASE("scale")
{
  REQUIRE(gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.25", "--b", "8", "--out", path("base")}).code == 0);

  auto same = gkdv_cmd({"scale", "--in", path("base"), "--amplitude", "1", "--out", path("same")});
  REQUIRE(same.code == 0);
  CHECK(slurp(path("base") + "/profile.csv") == slurp(path("same") + "/profile.csv"));
  CHECK(read_profile(path("same")).lambda == read_profile(path("base")).lambda);

  auto doubled = gkdv_cmd({"scale", "--in", path("base") + "/profile.csv", "--amplitude", "2", "--out", path("double")});
  REQUIRE(doubled.code == 0);
  CHECK(printed_lambda(doubled.out) == doctest::Approx(2 * read_profile(path("base")).lambda));
  CHECK(printed_lambda(doubled.out) == doctest::Approx(1.5).epsilon(0.01));

  REQUIRE(gkdv_cmd({"soliton", "--preset", "kdv-k22", "--h", "0.25", "--b", "14", "--out", path("mixed")}).code == 0);
  CHECK(gkdv_cmd({"scale", "--in", path("mixed"), "--amplitude", "2", "--out", path("mixed2")}).code
        == cli::exit_validation);
}

TEST_CASE("collide validation")
{
  CHECK(gkdv_cmd({"collide", "--domain", "-20", "20", "--h", "0.1", "--t-end", "1", "--out", path("none")}).code
        == cli::exit_validation);
  REQUIRE(gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.1", "--b", "8", "--out", path("c1")}).code == 0);
  // Overlapping supports.
  CHECK(gkdv_cmd({"collide", "--profile", path("c1") + "@0", "--profile", path("c1") + "@3", "--domain", "-20",
                  "20", "--h", "0.1", "--t-end", "1", "--out", path("overlap")})
            .code
        == cli::exit_validation);
  // Antisoliton in a model without odd symmetry.
  CHECK(gkdv_cmd({"collide", "--profile", path("c1") + "@0@-1", "--domain", "-20", "20", "--h", "0.1",
                  "--t-end", "1", "--out", path("anti")})
            .code
        == cli::exit_validation);
  // Profile/model disagreement.
  CHECK(gkdv_cmd({"collide", "--preset", "k33", "--profile", path("c1") + "@0", "--domain", "-20", "20", "--h",
                  "0.1", "--t-end", "1", "--out", path("wrongmodel")})
            .code
        == cli::exit_validation);
}

TEST_CASE("collide and analyze a short single-compacton run")
{
  REQUIRE(gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.1", "--b", "8", "--out", path("p1")}).code == 0);
  auto c = gkdv_cmd({"collide", "--profile", path("p1") + "@-5", "--domain", "-20", "20", "--h", "0.1", "--dt",
                     "0.01", "--t-end", "2", "--snap", "20", "--out", path("run1")});
  REQUIRE(c.code == 0);
  const RunData data = read_run(path("run1"));
  CHECK(data.snapshots.size() == 11);
  CHECK(data.snapshots.back().t == doctest::Approx(2.0));
  // The embedded field equals the in-memory embedding of the re-read profile.
  const auto prof = read_profile(path("p1"));
  const auto field = embed({{&prof, -5.0, 1}}, data.grid);
  CHECK(data.snapshots.front().u == field.u);

  auto a = gkdv_cmd({"analyze", "--run", path("run1"), "--plot"});
  REQUIRE(a.code == 0);
  const auto report = read_json(path("run1") + "/report.json");
  CHECK(report["speeds"].size() == 1);
  CHECK(report["speeds"][0]["speed"].get<double>() == doctest::Approx(0.75).epsilon(0.02));
  CHECK(report.contains("manifest"));
  CHECK(fs::exists(path("run1") + "/report.gp"));
  CHECK(gkdv_cmd({"analyze", "--run", path("run1")}).code == cli::exit_validation);
  CHECK(gkdv_cmd({"analyze", "--run", path("run1"), "--force"}).code == 0);
  CHECK(gkdv_cmd({"analyze", "--run", path("nope")}).code == cli::exit_validation);
}

TEST_CASE("analyze a run with t_end = 0")
{
  REQUIRE(gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.1", "--b", "8", "--out", path("p0")}).code == 0);
  REQUIRE(gkdv_cmd({"collide", "--profile", path("p0") + "@0", "--domain", "-20", "20", "--h", "0.1", "--t-end",
                    "0", "--out", path("run0")})
              .code
          == 0);
  REQUIRE(gkdv_cmd({"analyze", "--run", path("run0")}).code == 0);
  const auto report = read_json(path("run0") + "/report.json");
  CHECK(report["snapshots"] == 1);
  CHECK(report["speeds"].empty());
}

TEST_CASE("converge writes both grids and a report")
{
  REQUIRE(gkdv_cmd({"soliton", "--preset", "k22", "--h", "0.2", "--b", "8", "--out", path("pc")}).code == 0);
  auto r = gkdv_cmd({"converge", "--profile", path("pc") + "@0", "--domain", "-20", "20", "--h", "0.2", "--dt",
                     "0.02", "--t-end", "1", "--snap", "10", "--out", path("conv")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(path("conv") + "/coarse/run.json"));
  CHECK(fs::exists(path("conv") + "/fine/run.json"));
  CHECK(fs::exists(path("conv") + "/manifest.json"));
  const auto report = read_json(path("conv") + "/report.json");
  CHECK(report["refinement"]["h_fine"].get<double>() == doctest::Approx(0.1));
  CHECK(read_run(path("conv") + "/fine").dt == doctest::Approx(0.01));
}

TEST_CASE("config files supply flags and the command line wins")
{
  const fs::path cfg = scratch() / "soliton.json";
  std::ofstream(cfg) << R"({"preset": "k22", "h": 0.5, "b": 8, "amplitude": 2})";
  auto expanded = cli::expand_config({"soliton", "--config", cfg.string(), "--h", "0.25", "--out", "x"});
  CHECK(expanded.front() == "soliton");
  CHECK(std::count(expanded.begin(), expanded.end(), "--h") == 1);
  CHECK(std::find(expanded.begin(), expanded.end(), "0.25") != expanded.end());

  auto r = gkdv_cmd({"soliton", "--config", cfg.string(), "--h", "0.25", "--out", path("fromcfg")});
  REQUIRE(r.code == 0);
  const auto prof = read_profile(path("fromcfg"));
  CHECK(prof.amplitude == 2.0);
  CHECK(prof.h() == doctest::Approx(0.25));

  CHECK(gkdv_cmd({"soliton", "--config", (scratch() / "missing.json").string(), "--out", path("nocfg")}).code
        == cli::exit_validation);
}
