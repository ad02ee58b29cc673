#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nvie/core.hpp"
#include "nvie/quadrature.hpp"
#include "nvie/types.hpp"

namespace nvie {

/// Stored entries per (j, k, m) record: scalar weight then the symmetric
/// matrix weight as xx, yy, zz, xy, xz, yz.
inline constexpr int kWeightFields = 7;
inline constexpr int kTableFormatVersion = 1;

/// Interpolated singular weights on the reference cube [-1,1]^3:
///   omega^(k)_{j,m}  = int_{cube \ B(x_j, delta)} phi_m(y) / |x_j - y|^k dy
///   Lambda^(k)_{j,m} = same with u u^T inserted, u = (y - x_j)/|y - x_j|
/// for k = 1, 2, 3. Tables built by compute_weight_table have edge == 2;
/// scale_weight_table produces physical-element copies.
struct WeightTable {
  int m = 0;
  double delta = 0.0;
  double edge = 2.0;
  std::uint64_t resolution_hash = 0;
  std::uint64_t checksum = 0;
  // Index ((j * 3 + (k - 1)) * M + node) * kWeightFields + field.
  std::vector<double> data;

  int nodes() const { return m * m * m; }
  std::size_t offset(int j, int k, int node) const {
    return ((static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(k - 1)) *
                static_cast<std::size_t>(nodes()) +
            static_cast<std::size_t>(node)) *
           kWeightFields;
  }
  double scalar(int j, int k, int node) const { return data[offset(j, k, node)]; }
  RealDyadic matrix(int j, int k, int node) const;
  /// FNV-1a 64 over the payload doubles.
  std::uint64_t compute_checksum() const;
};

/// Progress callback: (representatives done, representatives total).
using WeightProgress = std::function<void(int, int)>;

/// Builds the full table. Only one node per octahedral-symmetry orbit is
/// integrated; the rest are obtained by the corresponding signed permutation.
/// Each representative is evaluated at successive resolution levels until
/// the relative change of every k-block is below res.rel_tol.
WeightTable compute_weight_table(int m, double delta, const BruteForceResolution& res,
                                 const WeightProgress& progress = {});

/// Weights of a single singularity node, integrated directly (no symmetry
/// mapping). Layout [k-1][node][field].
std::vector<double> compute_node_weights(int m, double delta, int j,
                                         const BruteForceResolution& res);

/// Copy with k-blocks multiplied by (2/a)^k.
WeightTable scale_weight_table(const WeightTable& table, double a);

/// Per-k coefficients: kernel = sum_k (scalar[k] I + matrix[k] u u^T) / R^k.
struct KernelRecipe {
  std::array<Complex, 3> scalar{};
  std::array<Complex, 3> matrix{};
};

/// cos-test kernel: (I - uu)/R + (I - 3uu)/R^2 + (I - 3uu)/R^3.
KernelRecipe sample_recipe();

/// Dyadic Green's function kernel with the e^{-ikR} factor removed and the
/// 1/(4 pi) kept outside: (I - uu)/R - (i/k)(I - 3uu)/R^2 - (1/k^2)(I - 3uu)/R^3.
KernelRecipe greens_recipe(double k);

/// sum_k (scalar[k] omega^(k)_{j,node} I + matrix[k] Lambda^(k)_{j,node}).
ComplexDyadic weight_combination(const WeightTable& table, int j, int node,
                                 const KernelRecipe& recipe);

/// sum_node f_values[node] * weight_combination(table, j, node, recipe).
ComplexDyadic apply_weights(const WeightTable& table, int j, std::span<const Complex> f_values,
                            const KernelRecipe& recipe);

/// Canonical representative of a node's symmetry orbit (index triple reflected
/// to the lower half then sorted).
int orbit_representative(int m, int j);

void save_table(const WeightTable& table, const std::filesystem::path& path);
WeightTable load_table(const std::filesystem::path& path);

/// Header line written by save_table.
std::string table_header(const WeightTable& table);

/// Conventional file name, e.g. weights_m3_d0.05.viewt.
std::string table_file_name(int m, double delta);

}  // namespace nvie
