#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nvie/app/config.hpp"
#include "nvie/weights.hpp"

namespace nvie::app {

/// Loads weight tables from a directory, optionally building missing ones.
class TableStore {
 public:
  TableStore(std::filesystem::path directory, bool build_missing, BruteForceResolution res);

  /// Throws ConfigError listing the compute commands for every missing table
  /// (only when build_missing is off).
  void require(const std::vector<std::pair<int, double>>& tables) const;

  const WeightTable& get(int m, double delta);

  /// Provenance of every table handed out so far.
  json used() const;

  std::filesystem::path path_for(int m, double delta) const;

 private:
  std::filesystem::path dir_;
  bool build_missing_;
  BruteForceResolution res_;
  std::vector<std::pair<std::filesystem::path, WeightTable>> cache_;
};

/// Writes x,y,z,Re(Ex),Im(Ex),Re(Ey),Im(Ey),Re(Ez),Im(Ez) with 17 significant digits.
void write_field_csv(const std::filesystem::path& path, const std::vector<Vec3>& points,
                     const std::vector<ComplexVec3>& values);

/// Least-squares line y = slope * x + intercept with its R^2.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// log(e_coarse / e_fine) / log(d_coarse / d_fine); log2 of the error ratio
/// for halved deltas.
double observed_order(double e_coarse, double e_fine, double d_coarse, double d_fine);

/// Each experiment returns a report object; CSV side products go to out_dir.
json run_weight_accuracy(const RunConfig& cfg, TableStore& tables,
                         const std::filesystem::path& out_dir);
json run_delta_independence(const RunConfig& cfg, TableStore& tables,
                            const std::filesystem::path& out_dir);
json run_p_convergence(const RunConfig& cfg, TableStore& tables,
                       const std::filesystem::path& out_dir);
json run_solve(const RunConfig& cfg, TableStore& tables, const std::filesystem::path& out_dir);

/// Adds build id, version, config hash and the tables used.
void stamp_report(json& report, const RunConfig& cfg, const TableStore& tables);

/// Human-readable rendering of a report.
std::string render_text(const json& report);

}  // namespace nvie::app
