#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>

#include "nvie/app/cli.hpp"
#include "nvie/app/config.hpp"
#include "nvie/app/experiments.hpp"
#include "nvie/build_info.hpp"
#include "nvie/greens.hpp"

namespace py = pybind11;
using namespace nvie;

namespace {

std::string run_named(const std::string& name, const std::string& config_json,
                      const std::string& tables, const std::string& out, bool build_missing) {
  app::RunConfig cfg = app::parse_config(app::json::parse(config_json.empty() ? "{}" : config_json,
                                                          nullptr, true, true));
  if (!tables.empty()) cfg.tables.directory = tables;
  cfg.tables.build_missing = cfg.tables.build_missing || build_missing;
  app::validate(cfg);
  std::filesystem::create_directories(out);
  app::TableStore store(cfg.tables.directory, cfg.tables.build_missing, cfg.resolution);
  app::json r;
  if (name == "solve") {
    r = app::run_solve(cfg, store, out);
  } else if (name == "weight-accuracy") {
    r = app::run_weight_accuracy(cfg, store, out);
  } else if (name == "delta-independence") {
    r = app::run_delta_independence(cfg, store, out);
  } else if (name == "p-convergence") {
    r = app::run_p_convergence(cfg, store, out);
  } else {
    throw ConfigError("unknown experiment " + name);
  }
  app::stamp_report(r, cfg, store);
  return r.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Nystrom VIE solver for dielectric cubes";
  m.attr("__version__") = kVersion;
  m.attr("build_id") = kBuildId;

  py::register_exception<Error>(m, "NvieError", PyExc_RuntimeError);

  m.def("scalar_g", &scalar_g, py::arg("k"), py::arg("R"));
  m.def("dyadic_green", &dyadic_G, py::arg("k"), py::arg("r"), py::arg("r_src"));
  m.def("lagrange_basis", &lagrange_basis_3d, py::arg("m"), py::arg("x"));
  m.def(
      "gauss_legendre",
      [](int n) {
        const GaussRule1D g = gauss_legendre_1d(n);
        return py::make_tuple(g.nodes, g.weights);
      },
      py::arg("n"));

  py::class_<WeightTable>(m, "WeightTable")
      .def_readonly("m", &WeightTable::m)
      .def_readonly("delta", &WeightTable::delta)
      .def_readonly("checksum", &WeightTable::checksum)
      .def("scalar", &WeightTable::scalar, py::arg("j"), py::arg("k"), py::arg("node"))
      .def("matrix", &WeightTable::matrix, py::arg("j"), py::arg("k"), py::arg("node"))
      .def("header", [](const WeightTable& t) { return table_header(t); });

  m.def(
      "compute_weight_table",
      [](int mm, double delta) {
        py::gil_scoped_release release;
        return compute_weight_table(mm, delta, BruteForceResolution{});
      },
      py::arg("m"), py::arg("delta"));
  m.def(
      "save_table", [](const WeightTable& t, const std::string& p) { save_table(t, p); },
      py::arg("table"), py::arg("path"));
  m.def(
      "load_table", [](const std::string& p) { return load_table(p); }, py::arg("path"));
  m.def("table_file_name", &table_file_name, py::arg("m"), py::arg("delta"));

  m.def(
      "run",
      [](const std::string& name, const std::string& config_json, const std::string& tables,
         const std::string& out, bool build_missing) {
        py::gil_scoped_release release;
        return run_named(name, config_json, tables, out, build_missing);
      },
      py::arg("name"), py::arg("config_json") = "", py::arg("tables") = "", py::arg("out") = ".",
      py::arg("build_missing") = false);

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "nvie");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return app::run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
