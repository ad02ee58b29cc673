#include <doctest.h>

#include <cmath>

#include "nvie/core.hpp"
#include "nvie/quadrature.hpp"

using namespace nvie;

TEST_SUITE("quadrature") {
  TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1") {
    for (int n = 1; n <= 12; ++n) {
      const GaussRule1D g = gauss_legendre_1d(n);
      for (int d = 0; d <= 2 * n - 1; ++d) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += g.weights[static_cast<std::size_t>(i)] * std::pow(g.nodes[static_cast<std::size_t>(i)], d);
        const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("Lagrange basis partition of unity and cardinality") {
    for (int m = 1; m <= 7; ++m) {
      const TensorLagrangeBasis basis(m);
      const ReferenceNodeSet nodes = reference_nodes(m);
      for (const Vec3& x : {Vec3(0.13, -0.72, 0.5), Vec3(0.99, 0.99, -0.99), Vec3(0, 0, 0)}) {
        double s = 0;
        for (double v : basis.evaluate(x)) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
      const auto phi = basis.evaluate(nodes.nodes[0]);
      CHECK(phi[0] == doctest::Approx(1.0));
      for (std::size_t q = 1; q < phi.size(); ++q) CHECK(std::abs(phi[q]) < 1e-12);
    }
  }

  TEST_CASE("cube minus ball volume") {
    BruteForceResolution res;
    const double delta = 0.1;
    const double vol = integrate_cube_minus_ball([](const Vec3&) { return 1.0; }, Vec3(0.2, -0.1, 0.3),
                                                 delta, res);
    CHECK(vol == doctest::Approx(8.0 - 4.0 / 3.0 * kPi * delta * delta * delta).epsilon(1e-12));
  }

  TEST_CASE("ball rule moments") {
    const BallRule ball(Vec3(0.1, 0.2, 0.3), 0.05, default_ball_resolution());
    double vol = 0, r2 = 0;
    for (const auto& n : ball.nodes()) {
      vol += n.weight;
      r2 += n.weight * n.r * n.r;
    }
    const double a = 0.05;
    CHECK(vol == doctest::Approx(4.0 / 3.0 * kPi * a * a * a).epsilon(1e-13));
    CHECK(r2 == doctest::Approx(4.0 / 5.0 * kPi * std::pow(a, 5)).epsilon(1e-13));
  }

  TEST_CASE("singular integral self-consistency under resolution doubling") {
    const Vec3 c(0.31, -0.2, 0.05);
    auto kernel = [&](const Vec3& y) {
      const double R = (y - c).norm();
      return std::cos(y.x() + 2 * y.y()) / (R * R * R) * (1.0 + y.z());
    };
    auto integrate = [&](const BruteForceResolution& res) {
      double acc = 0.0;
      CubeMinusBallRule(c, 0.05, res).for_each_point([&](const Vec3& p, double w) { acc += w * kernel(p); });
      return acc;
    };
    const BruteForceResolution coarse;
    BruteForceResolution fine = coarse;
    fine.n_radial *= 2;
    fine.n_polar *= 2;
    fine.n_azimuthal *= 2;
    fine.n_outer *= 2;
    const double a = integrate(coarse);
    const double b = integrate(fine);
    CHECK(std::abs(a - b) <= 1e-8 * std::abs(b));
  }

  TEST_CASE("ball that leaves the cube is rejected") {
    CHECK_THROWS_AS(
        integrate_cube_minus_ball([](const Vec3&) { return 1.0; }, Vec3(0.95, 0, 0), 0.1, {}),
        GeometryError);
  }
}
