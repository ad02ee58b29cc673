#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "nvie/core.hpp"
#include "nvie/corrections.hpp"
#include "nvie/quadrature.hpp"
#include "nvie/system.hpp"

namespace nvie::app {

using json = nlohmann::json;

struct MeshSpec {
  std::string kind = "grid";  // grid | array
  // grid
  Vec3 domain_min = Vec3::Constant(-kPi / 2);
  Vec3 domain_max = Vec3::Constant(kPi / 2);
  std::array<int, 3> elements{1, 1, 1};
  // array
  Vec3 first_center = Vec3::Constant(0.25);
  double edge = 0.5;
  double gap = 0.25;
  std::array<int, 3> counts{3, 3, 1};
};

struct SolverSpec {
  std::string method = "direct";  // direct | gmres
  double tol = 1e-10;
  int restart = 50;
  int max_iter = 1000;
  bool block_jacobi = false;
  std::string storage = "auto";  // auto | dense | matrix_free
  /// Also run the other solver and record the agreement.
  bool cross_check = true;
};

struct TableSpec {
  std::string directory = "tables";
  bool build_missing = false;
};

struct ExportSpec {
  std::string axis = "z";
  /// Plane coordinate; NaN means the middle of the mesh bounding box.
  double value = std::numeric_limits<double>::quiet_NaN();
  std::array<int, 2> points{41, 41};
  bool nodes = true;
};

struct WeightAccuracySpec {
  int m = 3;
  std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  double reference_delta = 1e-3;
  /// interpolated: Lagrange interpolant of cos R (what the tables integrate);
  /// exact: cos R itself.
  std::string reference_integrand = "interpolated";
  double tolerance = 5e-4;
};

struct DeltaIndependenceSpec {
  std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  double reference_delta = 1e-3;
  /// Global row whose entries are compared.
  int row = 0;
};

struct PConvergenceSpec {
  std::vector<int> m_values{3, 4, 5, 6, 7};
  /// Gauss points per axis of the L2 evaluation grid.
  int grid = 21;
};

struct RunConfig {
  double omega = 1.0;
  double mu = 1.0;
  double eps_background = 1.0;
  Complex contrast = 4.0;
  MeshSpec mesh;
  int m = 3;
  double delta = 0.05;
  bool corrections = true;
  CorrectionForm correction_form = CorrectionForm::interpolated;
  IncidentWave wave = default_wave();
  SolverSpec solver;
  BruteForceResolution resolution;
  BruteForceResolution ball_resolution = default_ball_resolution();
  TableSpec tables;
  ExportSpec export_spec;
  WeightAccuracySpec weight_accuracy;
  DeltaIndependenceSpec delta_independence;
  PConvergenceSpec p_convergence;
  int threads = 0;
  int seed = 0;

  static IncidentWave default_wave();
};

/// Strict parse: unknown keys and wrong types raise ConfigError.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);
json to_json(const RunConfig& cfg);

/// Cheap checks run before any expensive work.
void validate(const RunConfig& cfg);

MaterialParams material(const RunConfig& cfg);
Mesh build_mesh_from(const RunConfig& cfg, int m);
CorrectionConfig correction_config(const RunConfig& cfg, double delta);

/// FNV-1a 64 of the canonical resolved-config dump, hex.
std::string config_hash(const RunConfig& cfg);

}  // namespace nvie::app
