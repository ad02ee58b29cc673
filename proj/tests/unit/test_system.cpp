#include <doctest.h>

#include "nvie/error.hpp"
#include "nvie/system.hpp"

using namespace nvie;

namespace {

const WeightTable& table(int m) {
  static const WeightTable t2 = compute_weight_table(2, 0.1, BruteForceResolution{});
  static const WeightTable t3 = compute_weight_table(3, 0.1, BruteForceResolution{});
  return m == 2 ? t2 : t3;
}

CorrectionConfig corrections() {
  CorrectionConfig c;
  c.delta = 0.1;
  return c;
}

IncidentWave wave() {
  IncidentWave w;
  w.phase_vector = Vec3(0.0, -1.0, 0.5);
  return w;
}

}  // namespace

TEST_SUITE("system") {
  const MaterialParams mat(1.0, 1.0, 1.0);

  TEST_CASE("zero contrast reproduces the incident field") {
    const Mesh mesh = build_mesh(Vec3(0, 0, 0), Vec3(2, 1, 1), {2, 1, 1}, 2, constant_contrast(0.0));
    const VieSystem sys = assemble_system(mesh, mat, wave(), table(2), corrections());
    const Solution s = solve_direct(sys);
    for (int i = 0; i < mesh.element_count(); ++i) {
      for (int j = 0; j < mesh.nodes_per_element(); ++j) {
        const ComplexVec3 inc = incident_field(wave(), mat.k(), mesh.element(i).node_positions[static_cast<std::size_t>(j)]);
        CHECK((s.coefficient(i, j) - inc).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }

  TEST_CASE("GMRES agrees with the direct solve") {
    const Mesh mesh = build_mesh(Vec3::Constant(-kPi / 2), Vec3::Constant(kPi / 2), {1, 1, 1}, 3,
                                 constant_contrast(4.0));
    const VieSystem sys = assemble_system(mesh, mat, wave(), table(3), corrections());
    const Solution d = solve_direct(sys);
    GmresOptions o;
    o.tol = 1e-13;
    o.restart = 100;
    const Solution g = solve_gmres(sys, o);
    CHECK((g.coefficients - d.coefficients).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(g.relative_residual <= 1e-13);
    o.block_jacobi = true;
    const Solution p = solve_gmres(sys, o);
    CHECK((p.coefficients - d.coefficients).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(p.iterations <= g.iterations);
  }

  TEST_CASE("solution is linear in the incident amplitude") {
    const Mesh mesh = build_array_mesh(Vec3::Constant(0.25), 0.5, 0.25, {2, 1, 1}, 2, constant_contrast(4.0));
    IncidentWave w = wave();
    const Solution a = solve_direct(assemble_system(mesh, mat, w, table(2), corrections()));
    w.amplitude = Complex(2.0, -1.0);
    const Solution b = solve_direct(assemble_system(mesh, mat, w, table(2), corrections()));
    CHECK((b.coefficients - Complex(2.0, -1.0) * a.coefficients).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("matrix-free and dense operators agree") {
    const Mesh mesh = build_array_mesh(Vec3::Constant(0.25), 0.5, 0.25, {2, 2, 1}, 2, constant_contrast(4.0));
    AssemblyOptions dense, free;
    dense.storage = StorageMode::dense;
    free.storage = StorageMode::matrix_free;
    const VieSystem d = assemble_system(mesh, mat, wave(), table(2), corrections(), dense);
    const VieSystem f = assemble_system(mesh, mat, wave(), table(2), corrections(), free);
    REQUIRE(d.dense());
    REQUIRE_FALSE(f.dense());
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(d.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = Complex(std::sin(1.0 + i), std::cos(2.0 * i));
    Eigen::VectorXcd yd(d.size()), yf(d.size());
    d.op->apply(x, yd);
    f.op->apply(x, yf);
    CHECK((yd - yf).cwiseAbs().maxCoeff() <= 1e-12 * yd.cwiseAbs().maxCoeff());
    CHECK((d.row(7) - f.row(7)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("row layout follows component blocks") {
    const Mesh mesh = build_array_mesh(Vec3::Constant(0.25), 0.5, 0.25, {2, 1, 1}, 2, constant_contrast(4.0));
    const VieSystem sys = assemble_system(mesh, mat, wave(), table(2), corrections());
    CHECK(sys.size() == 48);
    CHECK(sys.row_index(1, 1, 3) == 16 + 8 + 3);
    // Diagonal of V_xx is dominated by C de / eps_L = 1 + de/3.
    CHECK(std::abs(sys.block(0, 0)(0, 0)) > 1.0);
  }

  TEST_CASE("evaluation at nodes returns coefficients") {
    const Mesh mesh = build_mesh(Vec3::Constant(-kPi / 2), Vec3::Constant(kPi / 2), {1, 1, 1}, 3,
                                 constant_contrast(4.0));
    const Solution s = solve_direct(assemble_system(mesh, mat, wave(), table(3), corrections()));
    const Vec3 node = mesh.element(0).node_positions[5];
    CHECK((evaluate_solution(s, node) - s.coefficient(0, 5)).norm() < 1e-12);
    CHECK_THROWS_AS(evaluate_solution(s, Vec3(3, 0, 0)), DomainError);
  }

  TEST_CASE("misuse and configuration errors") {
    const Mesh mesh = build_mesh(Vec3::Constant(-1), Vec3::Constant(1), {1, 1, 1}, 2, constant_contrast(4.0));
    CHECK_THROWS_AS(assemble_A_far(Vec3::Zero(), mesh.element(0), mat), MisuseError);
    CorrectionConfig wrong = corrections();
    wrong.delta = 0.05;
    CHECK_THROWS_AS(assemble_system(mesh, mat, wave(), table(2), wrong), ConfigError);
    CHECK_THROWS_AS(assemble_system(mesh, mat, wave(), table(3), corrections()), ConfigError);
    const VieSystem singular = VieSystem::from_matrix(Eigen::MatrixXcd::Zero(3, 3), Eigen::VectorXcd::Ones(3));
    CHECK_THROWS_AS(solve_direct(singular), SolverError);
    GmresOptions o;
    o.tol = 0.5;
    CHECK_THROWS_AS(solve_gmres(singular, o), ParameterError);
  }
}
