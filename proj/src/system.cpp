#include "nvie/system.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "nvie/greens.hpp"

namespace nvie {

namespace {

int nodes_per_axis(const WeightTable& table) { return table.m; }

// Far interactions computed on the fly; element self blocks stored.
class MatrixFreeOperator : public LinearOperator {
 public:
  MatrixFreeOperator(std::shared_ptr<const Mesh> mesh, const MaterialParams& mat,
                     const std::vector<Eigen::MatrixXcd>* self_blocks)
      : mesh_(std::move(mesh)), mat_(mat), self_blocks_(self_blocks) {}

  Eigen::Index size() const override { return 3 * static_cast<Eigen::Index>(mesh_->node_count()); }

  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const override {
    const int N = mesh_->element_count();
    const int M = mesh_->nodes_per_element();
    const Eigen::Index NM = mesh_->node_count();
    const double k = mat_.k();
    const double w2mu = mat_.omega() * mat_.omega() * mat_.mu();
    const auto& wstd = mesh_->reference().weights_std;
    y.setZero(size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < N; ++i) {
      const Element& ei = mesh_->element(i);
      const Eigen::MatrixXcd& S = (*self_blocks_)[static_cast<std::size_t>(i)];
      Eigen::VectorXcd xi(3 * M);
      for (int b = 0; b < 3; ++b) {
        xi.segment(b * M, M) = x.segment(b * NM + static_cast<Eigen::Index>(i) * M, M);
      }
      const Eigen::VectorXcd yi = S * xi;
      for (int j = 0; j < M; ++j) {
        ComplexVec3 acc(yi(j), yi(M + j), yi(2 * M + j));
        const Vec3& r = ei.node_positions[static_cast<std::size_t>(j)];
        for (int n = 0; n < N; ++n) {
          if (n == i) {
            continue;
          }
          const Element& en = mesh_->element(n);
          const double vol = std::pow(0.5 * en.a, 3);
          for (int m = 0; m < M; ++m) {
            const Complex s = -w2mu * vol * en.delta_eps[static_cast<std::size_t>(m)] *
                              wstd[static_cast<std::size_t>(m)];
            if (s == Complex{}) {
              continue;
            }
            const ComplexDyadic G = dyadic_G(k, r, en.node_positions[static_cast<std::size_t>(m)]);
            const Eigen::Index col = static_cast<Eigen::Index>(n) * M + m;
            const ComplexVec3 xv(x(col), x(NM + col), x(2 * NM + col));
            acc += s * (G * xv);
          }
        }
        const Eigen::Index row = static_cast<Eigen::Index>(i) * M + j;
        y(row) = acc(0);
        y(NM + row) = acc(1);
        y(2 * NM + row) = acc(2);
      }
    }
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  MaterialParams mat_;
  const std::vector<Eigen::MatrixXcd>* self_blocks_;
};

// Owns the self blocks the matrix-free operator points into.
struct MatrixFreeHolder : public LinearOperator {
  std::vector<Eigen::MatrixXcd> blocks;
  std::unique_ptr<MatrixFreeOperator> inner;
  Eigen::Index size() const override { return inner->size(); }
  void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const override { inner->apply(x, y); }
};

// Self block of element i: C delta_jm - omega^2 mu A_self - B.
Eigen::MatrixXcd self_block(const Element& e, const WeightTable& table, const MaterialParams& mat,
                            const CorrectionConfig& cfg) {
  const int M = table.nodes();
  const double w2mu = mat.omega() * mat.omega() * mat.mu();
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(3 * M, 3 * M);
  for (int j = 0; j < M; ++j) {
    const std::vector<ComplexDyadic> A = assemble_A_self(e, j, table, mat);
    const std::vector<ComplexDyadic> B = correction_B_row(e, j, mat, cfg);
    for (int m = 0; m < M; ++m) {
      ComplexDyadic D = -w2mu * A[static_cast<std::size_t>(m)] - B[static_cast<std::size_t>(m)];
      if (m == j) {
        D += coefficient_C(e.delta_eps[static_cast<std::size_t>(j)] / mat.eps_background());
      }
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          S(b * M + j, c * M + m) = D(b, c);
        }
      }
    }
  }
  return S;
}

struct Givens {
  Complex c;
  Complex s;
};

// Rotation zeroing b in (a, b).
Givens make_givens(Complex a, Complex b) {
  const double na = std::abs(a);
  const double nb = std::abs(b);
  if (nb == 0.0) {
    return {1.0, 0.0};
  }
  if (na == 0.0) {
    return {0.0, std::conj(b) / nb};
  }
  const double norm = std::hypot(na, nb);
  const Complex phase = a / na;
  return {na / norm, phase * std::conj(b) / norm};
}

class BlockJacobi {
 public:
  BlockJacobi(const VieSystem& system) : mesh_(system.mesh) {
    if (!mesh_) {
      throw MisuseError("block-Jacobi preconditioning needs a mesh-backed system");
    }
    for (const Eigen::MatrixXcd& B : system.self_blocks) {
      lu_.emplace_back(B);
    }
  }
  Eigen::VectorXcd solve(const Eigen::VectorXcd& v) const {
    const int M = mesh_->nodes_per_element();
    const Eigen::Index NM = mesh_->node_count();
    Eigen::VectorXcd out(v.size());
    Eigen::VectorXcd local(3 * M);
    for (int i = 0; i < mesh_->element_count(); ++i) {
      for (int b = 0; b < 3; ++b) {
        local.segment(b * M, M) = v.segment(b * NM + static_cast<Eigen::Index>(i) * M, M);
      }
      const Eigen::VectorXcd z = lu_[static_cast<std::size_t>(i)].solve(local);
      for (int b = 0; b < 3; ++b) {
        out.segment(b * NM + static_cast<Eigen::Index>(i) * M, M) = z.segment(b * M, M);
      }
    }
    return out;
  }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

}  // namespace

ComplexVec3 incident_field(const IncidentWave& wave, double k, const Vec3& r) {
  const Complex phase = std::exp(kI * (k * wave.phase_vector.dot(r)));
  return wave.amplitude * phase * wave.polarization;
}

std::vector<ComplexDyadic> assemble_A_far(const Vec3& target, const Element& source,
                                          const MaterialParams& mat) {
  if (source.contains(target)) {
    throw MisuseError("assemble_A_far: target lies inside the source element; use assemble_A_self");
  }
  const int M = static_cast<int>(source.node_positions.size());
  const int m = static_cast<int>(std::lround(std::cbrt(static_cast<double>(M))));
  const ReferenceNodeSet nodes = reference_nodes(m);
  const double vol = std::pow(0.5 * source.a, 3);
  const double k = mat.k();
  std::vector<ComplexDyadic> out(static_cast<std::size_t>(M));
  for (int q = 0; q < M; ++q) {
    const auto idx = static_cast<std::size_t>(q);
    const Complex s = vol * source.delta_eps[idx] * nodes.weights_std[idx];
    out[idx] = (s == Complex{}) ? ComplexDyadic::Zero()
                                : ComplexDyadic(s * dyadic_G(k, target, source.node_positions[idx]));
  }
  return out;
}

std::vector<ComplexDyadic> assemble_A_self(const Element& element, int j,
                                           const WeightTable& table, const MaterialParams& mat) {
  const int M = table.nodes();
  if (static_cast<int>(element.node_positions.size()) != M) {
    throw ConfigError("assemble_A_self: weight table has m=" + std::to_string(table.m) +
                      " but the element has " + std::to_string(element.node_positions.size()) +
                      " nodes");
  }
  if (j < 0 || j >= M) {
    throw ParameterError("assemble_A_self: node index out of range");
  }
  const double k = mat.k();
  // Fold the (edge / a)^k weight scaling into the recipe.
  KernelRecipe recipe = greens_recipe(k);
  const double base = table.edge / element.a;
  double factor = 1.0;
  for (std::size_t q = 0; q < 3; ++q) {
    factor *= base;
    recipe.scalar[q] *= factor;
    recipe.matrix[q] *= factor;
  }
  const double pre = std::pow(0.5 * element.a, 3) / kFourPi;
  const Vec3& rj = element.node_positions[static_cast<std::size_t>(j)];
  std::vector<ComplexDyadic> out(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const auto idx = static_cast<std::size_t>(m);
    const double R = (element.node_positions[idx] - rj).norm();
    const Complex f = element.delta_eps[idx] * std::exp(-kI * (k * R));
    out[idx] = (f == Complex{}) ? ComplexDyadic::Zero()
                                : ComplexDyadic((pre * f) * weight_combination(table, j, m, recipe));
  }
  return out;
}

void DenseOperator::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
  y.noalias() = (*matrix_) * x;
}

Eigen::Index VieSystem::row_index(int b, int i, int j) const {
  if (!mesh) {
    throw MisuseError("row_index needs a mesh-backed system");
  }
  return static_cast<Eigen::Index>(b) * mesh->node_count() + mesh->flat_index(i, j);
}

Eigen::MatrixXcd VieSystem::block(int b, int c) const {
  if (!mesh || !matrix) {
    throw MisuseError("block() needs a dense, mesh-backed system");
  }
  const Eigen::Index NM = mesh->node_count();
  return matrix->block(b * NM, c * NM, NM, NM);
}

Eigen::VectorXcd VieSystem::row(Eigen::Index r) const {
  if (matrix) {
    return matrix->row(r).transpose();
  }
  // Row r of V is V^T e_r; recover it column by column.
  Eigen::VectorXcd out(size());
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(size());
  Eigen::VectorXcd y;
  for (Eigen::Index c = 0; c < size(); ++c) {
    e(c) = 1.0;
    op->apply(e, y);
    out(c) = y(r);
    e(c) = 0.0;
  }
  return out;
}

VieSystem VieSystem::from_matrix(Eigen::MatrixXcd matrix, Eigen::VectorXcd rhs) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size()) {
    throw ParameterError("VieSystem::from_matrix: dimension mismatch");
  }
  VieSystem s;
  auto shared = std::make_shared<const Eigen::MatrixXcd>(std::move(matrix));
  s.matrix = shared;
  s.op = std::make_shared<DenseOperator>(shared);
  s.rhs = std::move(rhs);
  return s;
}

VieSystem assemble_system(const Mesh& mesh, const MaterialParams& mat, const IncidentWave& wave,
                          const WeightTable& table, const CorrectionConfig& cfg,
                          const AssemblyOptions& options) {
  if (mesh.m() != nodes_per_axis(table)) {
    throw ConfigError("assemble_system: mesh uses m=" + std::to_string(mesh.m()) +
                      " but the weight table has m=" + std::to_string(table.m));
  }
  if (cfg.delta != table.delta) {
    std::ostringstream os;
    os.precision(17);
    os << "assemble_system: correction delta " << cfg.delta << " differs from table delta "
       << table.delta;
    throw ConfigError(os.str());
  }
  const int N = mesh.element_count();
  const int M = mesh.nodes_per_element();
  const Eigen::Index NM = mesh.node_count();
  const double k = mat.k();
  const double w2mu = mat.omega() * mat.omega() * mat.mu();

  VieSystem sys;
  auto shared_mesh = std::make_shared<const Mesh>(mesh);
  sys.mesh = shared_mesh;
  sys.rhs.resize(3 * NM);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < M; ++j) {
      const ComplexVec3 e = incident_field(wave, k, mesh.element(i).node_positions[static_cast<std::size_t>(j)]);
      for (int b = 0; b < 3; ++b) {
        sys.rhs(b * NM + mesh.flat_index(i, j)) = e(b);
      }
    }
  }

  std::vector<Eigen::MatrixXcd> blocks(static_cast<std::size_t>(N));
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < N; ++i) {
    blocks[static_cast<std::size_t>(i)] = self_block(mesh.element(i), table, mat, cfg);
  }

  bool dense = options.storage == StorageMode::dense ||
               (options.storage == StorageMode::automatic && 3 * NM <= options.dense_limit);
  if (!dense) {
    auto holder = std::make_shared<MatrixFreeHolder>();
    holder->blocks = blocks;
    holder->inner = std::make_unique<MatrixFreeOperator>(shared_mesh, mat, &holder->blocks);
    sys.op = holder;
    sys.self_blocks = std::move(blocks);
    return sys;
  }

  auto V = std::make_shared<Eigen::MatrixXcd>(Eigen::MatrixXcd::Zero(3 * NM, 3 * NM));
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < N; ++i) {
    const Element& ei = mesh.element(i);
    const Eigen::MatrixXcd& S = blocks[static_cast<std::size_t>(i)];
    const Eigen::Index r0 = static_cast<Eigen::Index>(i) * M;
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        V->block(b * NM + r0, c * NM + r0, M, M) = S.block(b * M, c * M, M, M);
      }
    }
    for (int j = 0; j < M; ++j) {
      const Vec3& r = ei.node_positions[static_cast<std::size_t>(j)];
      const Eigen::Index row = r0 + j;
      for (int n = 0; n < N; ++n) {
        if (n == i) {
          continue;
        }
        const std::vector<ComplexDyadic> A = assemble_A_far(r, mesh.element(n), mat);
        for (int m = 0; m < M; ++m) {
          const Eigen::Index col = static_cast<Eigen::Index>(n) * M + m;
          const ComplexDyadic D = -w2mu * A[static_cast<std::size_t>(m)];
          for (int b = 0; b < 3; ++b) {
            for (int c = 0; c < 3; ++c) {
              (*V)(b * NM + row, c * NM + col) = D(b, c);
            }
          }
        }
      }
    }
  }
  sys.matrix = V;
  sys.op = std::make_shared<DenseOperator>(V);
  sys.self_blocks = std::move(blocks);
  return sys;
}

ComplexVec3 Solution::coefficient(int element, int node) const {
  if (!mesh) {
    throw MisuseError("Solution::coefficient needs a mesh");
  }
  const Eigen::Index NM = mesh->node_count();
  const Eigen::Index idx = mesh->flat_index(element, node);
  return {coefficients(idx), coefficients(NM + idx), coefficients(2 * NM + idx)};
}

Solution solve_gmres(const VieSystem& system, double tol, int restart, int max_iter) {
  GmresOptions o;
  o.tol = tol;
  o.restart = restart;
  o.max_iter = max_iter;
  return solve_gmres(system, o);
}

Solution solve_gmres(const VieSystem& system, const GmresOptions& options) {
  if (!(options.tol > 0.0 && options.tol <= 1e-2)) {
    throw ParameterError("solve_gmres: tol must lie in (0, 1e-2]");
  }
  if (options.restart < 1 || options.max_iter < 1) {
    throw ParameterError("solve_gmres: restart and max_iter must be positive");
  }
  if (!system.op) {
    throw MisuseError("solve_gmres: system has no operator");
  }
  const Eigen::Index n = system.size();
  const Eigen::VectorXcd& b = system.rhs;
  std::unique_ptr<BlockJacobi> precond;
  if (options.block_jacobi) {
    precond = std::make_unique<BlockJacobi>(system);
  }
  auto apply_precond = [&](const Eigen::VectorXcd& v) {
    return precond ? precond->solve(v) : v;
  };

  Solution sol;
  sol.mesh = system.mesh;
  sol.method = options.block_jacobi ? "gmres+block-jacobi" : "gmres";
  sol.coefficients = Eigen::VectorXcd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    sol.residual_history = {0.0};
    return sol;
  }

  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd r = b;
  double rel = 1.0;
  sol.residual_history.push_back(rel);
  Eigen::VectorXcd best = x;
  double best_rel = rel;
  int total = 0;
  const int mr = options.restart;
  Eigen::MatrixXcd Vk(n, mr + 1);
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(mr + 1, mr);
  std::vector<Givens> rot(static_cast<std::size_t>(mr));
  Eigen::VectorXcd g(mr + 1);
  Eigen::VectorXcd w;

  while (total < options.max_iter) {
    const double beta = r.norm();
    Vk.col(0) = r / beta;
    H.setZero();
    g.setZero();
    g(0) = beta;
    int used = 0;
    for (int j = 0; j < mr && total < options.max_iter; ++j) {
      system.op->apply(apply_precond(Vk.col(j)), w);
      // Modified Gram-Schmidt.
      for (int i = 0; i <= j; ++i) {
        H(i, j) = Vk.col(i).dot(w);
        w -= H(i, j) * Vk.col(i);
      }
      H(j + 1, j) = w.norm();
      if (std::abs(H(j + 1, j)) > 0.0) {
        Vk.col(j + 1) = w / H(j + 1, j);
      }
      for (int i = 0; i < j; ++i) {
        const Givens& G = rot[static_cast<std::size_t>(i)];
        const Complex h1 = H(i, j);
        const Complex h2 = H(i + 1, j);
        H(i, j) = G.c * h1 + G.s * h2;
        H(i + 1, j) = -std::conj(G.s) * h1 + std::conj(G.c) * h2;
      }
      rot[static_cast<std::size_t>(j)] = make_givens(H(j, j), H(j + 1, j));
      const Givens& G = rot[static_cast<std::size_t>(j)];
      const Complex h1 = H(j, j);
      const Complex h2 = H(j + 1, j);
      H(j, j) = G.c * h1 + G.s * h2;
      H(j + 1, j) = 0.0;
      const Complex g1 = g(j);
      g(j) = G.c * g1;
      g(j + 1) = -std::conj(G.s) * g1;
      ++total;
      used = j + 1;
      rel = std::abs(g(j + 1)) / bnorm;
      sol.residual_history.push_back(rel);
      if (rel <= options.tol || std::abs(h2) == 0.0) {
        break;
      }
    }
    // Back substitution on the triangular least-squares system.
    Eigen::VectorXcd y = H.topLeftCorner(used, used)
                             .triangularView<Eigen::Upper>()
                             .solve(g.head(used));
    x += apply_precond(Vk.leftCols(used) * y);
    system.op->apply(x, w);
    r = b - w;
    rel = r.norm() / bnorm;
    sol.residual_history.back() = rel;
    if (rel < best_rel) {
      best_rel = rel;
      best = x;
    }
    if (rel <= options.tol) {
      sol.coefficients = x;
      sol.relative_residual = rel;
      sol.iterations = total;
      return sol;
    }
  }
  std::ostringstream os;
  os << "GMRES did not reach tol " << options.tol << " in " << options.max_iter
     << " iterations (relative residual " << best_rel << ")";
  throw SolverError(os.str(), best, best_rel, sol.residual_history);
}

Solution solve_direct(const VieSystem& system, Eigen::Index dense_limit) {
  const Eigen::Index n = system.size();
  std::shared_ptr<const Eigen::MatrixXcd> A = system.matrix;
  if (!A) {
    if (n > dense_limit) {
      throw SolverError("solve_direct: " + std::to_string(n) +
                        " unknowns exceed the dense limit " + std::to_string(dense_limit));
    }
    auto full = std::make_shared<Eigen::MatrixXcd>(n, n);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd col;
    for (Eigen::Index c = 0; c < n; ++c) {
      e(c) = 1.0;
      system.op->apply(e, col);
      full->col(c) = col;
      e(c) = 0.0;
    }
    A = full;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(*A);
  const Eigen::MatrixXcd& LU = lu.matrixLU();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (LU(i, i) == Complex{} || !std::isfinite(std::abs(LU(i, i)))) {
      throw SolverError("solve_direct: matrix is singular to working precision");
    }
  }
  Solution sol;
  sol.mesh = system.mesh;
  sol.method = "lu";
  sol.coefficients = lu.solve(system.rhs);
  if (!sol.coefficients.allFinite()) {
    throw SolverError("solve_direct: non-finite solution");
  }
  const double bnorm = system.rhs.norm();
  const Eigen::VectorXcd res = system.rhs - (*A) * sol.coefficients;
  sol.relative_residual = bnorm > 0.0 ? res.norm() / bnorm : res.norm();
  sol.residual_history = {sol.relative_residual};
  sol.iterations = 1;
  const double rcond = lu.rcond();
  if (rcond < 1e-12 || sol.relative_residual > 1e-12) {
    std::ostringstream os;
    os << "ill-conditioned system: rcond estimate " << rcond << ", relative residual "
       << sol.relative_residual;
    sol.warning = os.str();
  }
  return sol;
}

ComplexVec3 evaluate_solution(const Solution& sol, const Vec3& r) {
  if (!sol.mesh) {
    throw MisuseError("evaluate_solution: solution carries no mesh");
  }
  const int i = sol.mesh->locate(r);
  if (i < 0) {
    std::ostringstream os;
    os << "evaluate_solution: point (" << r.x() << ", " << r.y() << ", " << r.z()
       << ") is outside every element";
    throw DomainError(os.str());
  }
  const Element& e = sol.mesh->element(i);
  const Vec3 y = e.to_reference(r);
  const int M = sol.mesh->nodes_per_element();
  for (int j = 0; j < M; ++j) {
    if (e.node_positions[static_cast<std::size_t>(j)] == r) {
      return sol.coefficient(i, j);
    }
  }
  const std::vector<double> phi = lagrange_basis_3d(sol.mesh->m(), y);
  ComplexVec3 out = ComplexVec3::Zero();
  for (int j = 0; j < M; ++j) {
    out += phi[static_cast<std::size_t>(j)] * sol.coefficient(i, j);
  }
  return out;
}

}  // namespace nvie
