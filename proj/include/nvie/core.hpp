#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "nvie/quadrature.hpp"
#include "nvie/types.hpp"

namespace nvie {

/// Homogeneous background. The wavenumber is derived, never stored.
class MaterialParams {
 public:
  MaterialParams(double omega, double mu, double eps_background);

  double omega() const { return omega_; }
  double mu() const { return mu_; }
  double eps_background() const { return eps_background_; }
  /// k with k^2 = omega^2 * eps_background * mu.
  double k() const { return omega_ * std::sqrt(eps_background_ * mu_); }

 private:
  double omega_;
  double mu_;
  double eps_background_;
};

struct ReferenceNodeSet {
  int m = 0;
  GaussRule1D rule;
  std::vector<Vec3> nodes;           // m^3 points, x index fastest
  std::vector<double> weights_std;   // tensor Gauss weights, sum 8

  int size() const { return static_cast<int>(nodes.size()); }
  int index(int ix, int iy, int iz) const { return ix + m * (iy + m * iz); }
  std::array<int, 3> triple(int j) const { return {j % m, (j / m) % m, j / (m * m)}; }
};

/// Tensor Gauss nodes on [-1,1]^3. 1 <= m <= 16.
ReferenceNodeSet reference_nodes(int m);

struct Element {
  Vec3 center;
  double a = 0.0;  // edge length
  std::vector<Vec3> node_positions;
  std::vector<Complex> delta_eps;

  /// Physical point for a reference-cube point.
  Vec3 to_physical(const Vec3& ref) const { return center + (0.5 * a) * ref; }
  Vec3 to_reference(const Vec3& phys) const { return (phys - center) * (2.0 / a); }
  /// Closed-cube containment with a relative slack of `rel_tol * a`.
  bool contains(const Vec3& p, double rel_tol = 1e-12) const;
};

using ContrastFunction = std::function<Complex(const Vec3&)>;

class Mesh {
 public:
  Mesh(int m, std::vector<Element> elements);

  int m() const { return nodes_.m; }
  int nodes_per_element() const { return nodes_.size(); }
  int element_count() const { return static_cast<int>(elements_.size()); }
  /// N * M.
  int node_count() const { return element_count() * nodes_per_element(); }
  const std::vector<Element>& elements() const { return elements_; }
  const Element& element(int i) const { return elements_.at(static_cast<std::size_t>(i)); }
  const ReferenceNodeSet& reference() const { return nodes_; }
  /// Flat node index for (element i, local node j).
  int flat_index(int i, int j) const { return i * nodes_per_element() + j; }

  /// First element whose closed cube contains p, or -1.
  int locate(const Vec3& p) const;

 private:
  ReferenceNodeSet nodes_;
  std::vector<Element> elements_;
};

Element make_element(const Vec3& center, double a, const ReferenceNodeSet& nodes,
                     const ContrastFunction& delta_eps_fn);

/// Uniform grid of cubic cells. Cells that are not cubes are rejected.
Mesh build_mesh(const Vec3& domain_min, const Vec3& domain_max,
                const std::array<int, 3>& n_per_axis, int m,
                const ContrastFunction& delta_eps_fn);

/// Elements with explicit centers and a common edge; interiors must be disjoint.
Mesh mesh_from_centers(const std::vector<Vec3>& centers, double a, int m,
                       const ContrastFunction& delta_eps_fn);

/// counts[0] x counts[1] x counts[2] cubes of edge a separated by `gap`,
/// starting from first_center.
Mesh build_array_mesh(const Vec3& first_center, double a, double gap,
                      const std::array<int, 3>& counts, int m,
                      const ContrastFunction& delta_eps_fn);

ContrastFunction constant_contrast(Complex value);

}  // namespace nvie
