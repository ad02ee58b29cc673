#include <doctest.h>

#include "nvie/error.hpp"
#include "nvie/greens.hpp"

using namespace nvie;

TEST_SUITE("greens") {
  TEST_CASE("scalar splitting g = g0 + g~") {
    for (double k : {0.3, 1.0, 2.5}) {
      for (double R : {1e-6, 1e-3, 0.004, 0.2, 1.0, 3.7}) {
        const Complex g = scalar_g(k, R);
        const Complex split = scalar_g0(R) + scalar_g_tilde(k, R);
        CHECK(std::abs(g - split) <= 1e-15 * std::max(1.0, std::abs(g)));
      }
    }
    CHECK(std::abs(scalar_g_tilde(2.0, 0.0) - Complex(0, -2.0 / (4 * kPi))) < 1e-16);
  }

  TEST_CASE("dyadic splitting G = g I + (H0 + H~) / k^2") {
    const double k = 1.3;
    const Vec3 src(0.1, -0.2, 0.3);
    for (const Vec3& r : {Vec3(0.4, 0.1, 0.2), Vec3(1.5, -2.0, 0.7), Vec3(0.1, -0.2, 0.305)}) {
      const ComplexDyadic G = dyadic_G(k, r, src);
      const double R = (r - src).norm();
      const ComplexDyadic split = scalar_g(k, R) * ComplexDyadic::Identity() +
                                  (hessian_g0(r, src) + hessian_g_tilde(k, r, src)) / (k * k);
      CHECK((G - split).norm() <= 1e-15 * std::max(1.0, G.norm()) * 10);
    }
  }

  TEST_CASE("dyadic symmetry and reciprocity") {
    const double k = 0.8;
    const Vec3 a(0.3, 0.2, -0.5), b(-0.4, 0.9, 0.1);
    const ComplexDyadic Gab = dyadic_G(k, a, b);
    const ComplexDyadic Gba = dyadic_G(k, b, a);
    CHECK((Gab - Gab.transpose()).norm() <= 1e-13);
    CHECK((Gab - Gba).norm() <= 1e-13);
  }

  TEST_CASE("closed form matches the textbook dyadic") {
    const double k = 1.1;
    const Vec3 r(0.7, -0.3, 0.4), s(0.0, 0.0, 0.0);
    const double R = (r - s).norm();
    const Vec3 u = (r - s) / R;
    const RealDyadic uu = u * u.transpose();
    const RealDyadic I = RealDyadic::Identity();
    const Complex e = std::exp(Complex(0, -k * R));
    const ComplexDyadic ref =
        e * ((I - uu).cast<Complex>() / (4 * kPi * R) -
             Complex(0, 1) * (I - 3 * uu).cast<Complex>() / (4 * kPi * R * R * k) -
             (I - 3 * uu).cast<Complex>() / (4 * kPi * R * R * R * k * k));
    CHECK((dyadic_G(k, r, s) - ref).norm() < 1e-14);
  }

  TEST_CASE("series branch is continuous at the threshold") {
    const double k = 1.0;
    const double R = kSeriesThreshold / k;
    const Vec3 s(0, 0, 0);
    const ComplexDyadic lo = hessian_g_tilde(k, Vec3(R * (1 - 1e-9), 0, 0), s);
    const ComplexDyadic hi = hessian_g_tilde(k, Vec3(R * (1 + 1e-9), 0, 0), s);
    CHECK((lo - hi).norm() < 1e-8 * hi.norm());
  }

  TEST_CASE("invalid input") {
    CHECK_THROWS_AS(scalar_g(1.0, 0.0), SingularityError);
    CHECK_THROWS_AS(dyadic_G(0.0, Vec3(1, 0, 0), Vec3(0, 0, 0)), ParameterError);
    CHECK_THROWS_AS(separation(Vec3(1, 2, 3), Vec3(1, 2, 3)), SingularityError);
  }
}
