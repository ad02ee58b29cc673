#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nvie/core.hpp"
#include "nvie/corrections.hpp"
#include "nvie/types.hpp"
#include "nvie/weights.hpp"

namespace nvie {

/// amplitude * polarization * e^{ik (p . r)}. p is used verbatim, so
/// |p| != 1 is allowed.
struct IncidentWave {
  ComplexVec3 polarization = ComplexVec3(1.0, 0.0, 0.0);
  Vec3 phase_vector = Vec3(0.0, 0.0, 1.0);
  Complex amplitude = 1.0;
};

ComplexVec3 incident_field(const IncidentWave& wave, double k, const Vec3& r);

/// Far interaction of a target point with every node of a source element:
/// (a/2)^3 de_m G(r, r_m) w_m. Throws MisuseError if r lies in the element.
std::vector<ComplexDyadic> assemble_A_far(const Vec3& target, const Element& source,
                                          const MaterialParams& mat);

/// Self interaction of node j with every node of its own element, using the
/// reference table scaled to the element edge. Excludes C and B.
std::vector<ComplexDyadic> assemble_A_self(const Element& element, int j,
                                           const WeightTable& table, const MaterialParams& mat);

/// y = A x for a square complex operator.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Eigen::Index size() const = 0;
  virtual void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const = 0;
};

class DenseOperator : public LinearOperator {
 public:
  explicit DenseOperator(std::shared_ptr<const Eigen::MatrixXcd> matrix)
      : matrix_(std::move(matrix)) {}
  Eigen::Index size() const override { return matrix_->rows(); }
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const override;
  const Eigen::MatrixXcd& matrix() const { return *matrix_; }

 private:
  std::shared_ptr<const Eigen::MatrixXcd> matrix_;
};

enum class StorageMode { automatic, dense, matrix_free };

struct AssemblyOptions {
  StorageMode storage = StorageMode::automatic;
  /// automatic switches to matrix-free above this many unknowns (3NM).
  Eigen::Index dense_limit = 12000;
};

/// V c = rhs with unknowns ordered (x-block, y-block, z-block); inside a block
/// the row of (element i, node j) is mesh.flat_index(i, j).
struct VieSystem {
  std::shared_ptr<const Mesh> mesh;             // null for raw systems
  std::shared_ptr<const Eigen::MatrixXcd> matrix;  // null when matrix-free
  std::shared_ptr<const LinearOperator> op;
  /// 3M x 3M self block of each element (rows/cols ordered like the global
  /// system restricted to the element).
  std::vector<Eigen::MatrixXcd> self_blocks;
  Eigen::VectorXcd rhs;

  Eigen::Index size() const { return rhs.size(); }
  bool dense() const { return static_cast<bool>(matrix); }
  /// Global row of component b (0..2) at (element i, node j).
  Eigen::Index row_index(int b, int i, int j) const;
  /// Copy of the NM x NM block V_bc (dense systems only).
  Eigen::MatrixXcd block(int b, int c) const;
  /// Row `r` of V (works in both storage modes).
  Eigen::VectorXcd row(Eigen::Index r) const;

  static VieSystem from_matrix(Eigen::MatrixXcd matrix, Eigen::VectorXcd rhs);
};

VieSystem assemble_system(const Mesh& mesh, const MaterialParams& mat, const IncidentWave& wave,
                          const WeightTable& table, const CorrectionConfig& cfg,
                          const AssemblyOptions& options = {});

struct Solution {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXcd coefficients;
  std::vector<double> residual_history;
  double relative_residual = 0.0;
  int iterations = 0;
  std::string method;
  /// Non-empty when the solve succeeded but looks unreliable.
  std::string warning;

  ComplexVec3 coefficient(int element, int node) const;
};

struct GmresOptions {
  double tol = 1e-10;
  int restart = 50;
  int max_iter = 1000;
  bool block_jacobi = false;
};

/// Restarted GMRES (right-preconditioned when block_jacobi is set, so the
/// monitored residual is the true one). Throws SolverError on failure.
Solution solve_gmres(const VieSystem& system, const GmresOptions& options = {});
Solution solve_gmres(const VieSystem& system, double tol, int restart, int max_iter);

/// Dense LU with partial pivoting. Matrix-free systems are materialised when
/// they have at most dense_limit unknowns.
Solution solve_direct(const VieSystem& system, Eigen::Index dense_limit = 12000);

/// Lagrange interpolation of the solution inside the containing element.
ComplexVec3 evaluate_solution(const Solution& sol, const Vec3& r);

}  // namespace nvie
