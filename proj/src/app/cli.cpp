#include "nvie/app/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "nvie/app/config.hpp"
#include "nvie/app/experiments.hpp"
#include "nvie/build_info.hpp"

namespace nvie::app {

namespace fs = std::filesystem;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::accuracy:
    case ErrorKind::singularity:
    case ErrorKind::corruption:
      return 3;
    case ErrorKind::solver:
      return 4;
    default:
      return 2;
  }
}

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string tables;
  std::optional<int> threads;
  std::optional<int> seed;
  std::optional<int> m;
  std::optional<double> delta;
  bool build_missing = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--tables", c.tables, "Weight table directory (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = library default)");
  cmd->add_option("--seed", c.seed, "Recorded in the report; the solver is deterministic");
  cmd->add_option("--m", c.m, "Nodes per axis");
  cmd->add_option("--delta", c.delta, "Exclusion ratio");
  cmd->add_flag("--build-missing", c.build_missing, "Compute missing weight tables");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.tables.empty()) cfg.tables.directory = c.tables;
  if (c.threads) cfg.threads = *c.threads;
  if (c.seed) cfg.seed = *c.seed;
  if (c.m) cfg.m = *c.m;
  if (c.delta) cfg.delta = *c.delta;
  if (c.build_missing) cfg.tables.build_missing = true;
  validate(cfg);
  return cfg;
}

void set_threads(int n) {
#if defined(_OPENMP)
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) {
    throw ConfigError("cannot write " + p.string());
  }
  out << text;
}

/// Runs `body` with the output directory prepared and a FAILED marker on error.
int run_in(const fs::path& out, const std::function<int()>& body) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::cerr << "error: cannot create " << out.string() << ": " << ec.message() << '\n';
    return 2;
  }
  fs::remove(out / "FAILED", ec);
  auto fail = [&](const std::string& kind, const std::string& what, int code) {
    std::cerr << "error (" << kind << "): " << what << '\n';
    std::ofstream(out / "FAILED") << kind << ": " << what << '\n';
    return code;
  };
  try {
    return body();
  } catch (const SolverError& e) {
    return fail("solver", e.what(), 4);
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what(), exit_code_for(e));
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 3);
  }
}

int run_experiment(const std::string& name, const Common& c) {
  const fs::path out(c.out.empty() ? "out" : c.out);
  return run_in(out, [&] {
    const RunConfig cfg = resolve(c);
    set_threads(cfg.threads);
    write_text(out / "resolved_config.json", to_json(cfg).dump(2) + "\n");
    TableStore tables(cfg.tables.directory, cfg.tables.build_missing, cfg.resolution);
    const auto t0 = std::chrono::steady_clock::now();
    json report;
    if (name == "solve") {
      report = run_solve(cfg, tables, out);
    } else if (name == "weight-accuracy") {
      report = run_weight_accuracy(cfg, tables, out);
    } else if (name == "delta-independence") {
      report = run_delta_independence(cfg, tables, out);
    } else {
      report = run_p_convergence(cfg, tables, out);
    }
    report["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stamp_report(report, cfg, tables);
    write_text(out / "report.json", report.dump(2) + "\n");
    const std::string text = render_text(report);
    write_text(out / "report.txt", text);
    std::cout << text;
    return report.value("pass", true) ? 0 : 1;
  });
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

int weights_compute(const Common& c) {
  const RunConfig probe = c.config.empty() ? RunConfig{} : load_config(c.config);
  const fs::path out(c.out.empty() ? probe.tables.directory : c.out);
  return run_in(out, [&] {
    RunConfig cfg = resolve(c);
    set_threads(cfg.threads);
    const fs::path path = out / table_file_name(cfg.m, cfg.delta);
    const WeightTable t = compute_weight_table(cfg.m, cfg.delta, cfg.resolution,
                                               [](int done, int total) {
                                                 std::cerr << "\rrepresentative " << done << "/"
                                                           << total << std::flush;
                                               });
    std::cerr << '\n';
    save_table(t, path);
    std::cout << path.string() << "  checksum " << hex(t.checksum) << '\n';
    return 0;
  });
}

int weights_inspect(const std::string& file) {
  try {
    const WeightTable t = load_table(file);
    json j = {{"file", file},
              {"m", t.m},
              {"delta", t.delta},
              {"nodes", t.nodes()},
              {"values", t.data.size()},
              {"resolution", hex(t.resolution_hash)},
              {"checksum", hex(t.checksum)},
              {"header", table_header(t)}};
    // Center-node entries as a quick sanity view.
    if (t.m % 2 == 1) {
      const int h = t.m / 2;
      const int j0 = h + t.m * (h + t.m * h);
      json center = json::array();
      for (int k = 1; k <= 3; ++k) {
        const double* row = t.data.data() + t.offset(j0, k, j0);
        center.push_back(std::vector<double>(row, row + kWeightFields));
      }
      j["center_self_weights"] = center;
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Nystrom volume integral equation solver for dielectric cubes"};
  app.set_version_flag("--version", std::string(kVersion) + " (" + kBuildId + ")");
  app.require_subcommand(1);

  Common common;
  std::string inspect_file;
  std::string experiment;

  auto* weights = app.add_subcommand("weights", "Build or inspect singular weight tables");
  weights->require_subcommand(1);
  auto* compute = weights->add_subcommand("compute", "Compute one table");
  add_common(compute, common);
  auto* inspect = weights->add_subcommand("inspect", "Print a table header");
  inspect->add_option("file", inspect_file, "Table file")->required();

  auto* solve = app.add_subcommand("solve", "Solve a scattering problem and export fields");
  add_common(solve, common);

  auto* exp = app.add_subcommand("experiment", "Run a convergence study");
  exp->require_subcommand(1);
  for (const char* name : {"weight-accuracy", "delta-independence", "p-convergence"}) {
    auto* sub = exp->add_subcommand(name);
    add_common(sub, common);
    sub->callback([&experiment, name] { experiment = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (compute->parsed()) return weights_compute(common);
  if (inspect->parsed()) return weights_inspect(inspect_file);
  if (solve->parsed()) return run_experiment("solve", common);
  return run_experiment(experiment, common);
}

}  // namespace nvie::app
