#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nvie/app/cli.hpp"
#include "nvie/app/config.hpp"
#include "nvie/app/experiments.hpp"

using namespace nvie;
using namespace nvie::app;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nvie");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "nvie_unit_app" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("app") {
  TEST_CASE("config round trip and hash") {
    const RunConfig a;
    const RunConfig b = parse_config(to_json(a));
    CHECK(to_json(b) == to_json(a));
    CHECK(config_hash(a) == config_hash(b));
    RunConfig c = a;
    c.delta = 0.025;
    CHECK(config_hash(c) != config_hash(a));
  }

  TEST_CASE("strict parsing") {
    CHECK_THROWS_AS(parse_config(json{{"omgea", 1.0}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"m", "three"}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"solver", {{"tolerance", 1e-8}}}}), ConfigError);
    RunConfig bad;
    bad.solver.tol = 0.5;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }

  TEST_CASE("array mesh from config") {
    const RunConfig c = parse_config(json::parse(R"({"mesh": {"kind": "array", "gap": 0.1}, "contrast": 16})"));
    const Mesh mesh = build_mesh_from(c, 2);
    CHECK(mesh.element_count() == 9);
    CHECK(mesh.element(1).center.x() == doctest::Approx(0.85));
  }

  TEST_CASE("line fit and observed order") {
    const LineFit f = fit_line({1, 2, 3, 4}, {1.0, -1.0, -3.0, -5.0});
    CHECK(f.slope == doctest::Approx(-2.0));
    CHECK(f.intercept == doctest::Approx(3.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(observed_order(4e-3, 1e-3, 0.1, 0.05) == doctest::Approx(2.0));
  }

  TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(GeometryError("x")) == 2);
    CHECK(exit_code_for(AccuracyError("x")) == 3);
    CHECK(exit_code_for(CorruptionError("x")) == 3);
    CHECK(exit_code_for(SolverError("x")) == 4);
  }

  TEST_CASE("missing tables fail fast with a marker") {
    const fs::path out = scratch_dir("missing");
    const fs::path tables = scratch_dir("no_tables");
    CHECK(cli({"solve", "--out", out.string(), "--tables", tables.string()}) == 2);
    CHECK(fs::exists(out / "FAILED"));
    CHECK(fs::exists(out / "resolved_config.json"));
  }

  TEST_CASE("bad arguments are usage errors") {
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"solve", "--m", "notanumber"}) == 2);
  }

  TEST_CASE("solve writes reports and fields") {
    const fs::path out = scratch_dir("solve");
    const fs::path tables = scratch_dir("tables");
    CHECK(cli({"weights", "compute", "--m", "2", "--delta", "0.1", "--out", tables.string()}) == 0);
    CHECK(cli({"weights", "inspect", (tables / "weights_m2_d0.1.viewt").string()}) == 0);
    const fs::path cfg = out / "cfg.json";
    std::ofstream(cfg) << R"({
      // array of cubes with a small gap
      "mesh": {"kind": "array", "counts": [2, 1, 1]},
      "m": 2, "delta": 0.1,
      "export": {"points": [8, 8]}
    })";
    CHECK(cli({"solve", "--config", cfg.string(), "--out", out.string(), "--tables", tables.string()}) == 0);
    CHECK_FALSE(fs::exists(out / "FAILED"));
    for (const char* f : {"report.json", "report.txt", "resolved_config.json", "field_plane.csv",
                          "field_nodes.csv", "scattered_nodes.csv"}) {
      CHECK(fs::exists(out / f));
    }
    std::ifstream in(out / "report.json");
    const json r = json::parse(in);
    CHECK(r["tables"].size() == 1);
    CHECK(r["config_hash"].get<std::string>().size() == 16);
    CHECK(r["gmres_direct_max_diff"].get<double>() <= 1e-10);
  }
}
