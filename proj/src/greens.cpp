#include "nvie/greens.hpp"

#include <cmath>

namespace nvie {

namespace {

RealDyadic outer_u(const Vec3& u) { return u * u.transpose(); }

// (e^{z} - 1)/z with z = -ikR, as a series for small |z|.
Complex expm1_over_z_series(Complex z) {
  Complex term{1.0, 0.0};
  Complex sum{0.0, 0.0};
  for (int n = 1; n <= kSeriesTerms; ++n) {
    sum += term;
    term *= z / static_cast<double>(n + 1);
  }
  return sum;
}

// q = (e^{z}(1 - z) - 1) / R^2 with z = -ikR; equals ik e^{-ikR}/R + (e^{-ikR}-1)/R^2.
Complex cancellation_term(double k, double R) {
  const Complex z = -kI * k * R;
  if (std::abs(k * R) < kSeriesThreshold) {
    // -(1/R^2) sum_{n>=2} (n-1) z^n / n!  ==  -(z^2/R^2) sum_{n>=2} (n-1) z^{n-2}/n!
    Complex sum{0.0, 0.0};
    Complex zpow{1.0, 0.0};
    double fact = 2.0;
    for (int n = 2; n < 2 + kSeriesTerms; ++n) {
      sum += static_cast<double>(n - 1) * zpow / fact;
      zpow *= z;
      fact *= static_cast<double>(n + 1);
    }
    // z^2 / R^2 = -k^2
    return (k * k) * sum;
  }
  const Complex e = std::exp(z);
  return (e * (1.0 - z) - 1.0) / (R * R);
}

}  // namespace

Separation separation(const Vec3& r, const Vec3& r_src) {
  const Vec3 d = r_src - r;
  const double R = d.norm();
  if (!(R > 0.0)) {
    throw SingularityError("kernel evaluated at coincident points (R = 0)");
  }
  return {R, d / R};
}

Complex scalar_g(double k, double R) {
  if (!(R > 0.0)) {
    throw SingularityError("scalar_g: R must be positive");
  }
  return std::exp(-kI * (k * R)) / (kFourPi * R);
}

double scalar_g0(double R) {
  if (!(R > 0.0)) {
    throw SingularityError("scalar_g0: R must be positive");
  }
  return 1.0 / (kFourPi * R);
}

Complex scalar_g_tilde(double k, double R) {
  if (R < 0.0) {
    throw ParameterError("scalar_g_tilde: R must be non-negative");
  }
  const Complex z = -kI * (k * R);
  if (std::abs(k * R) < kSeriesThreshold) {
    return (-kI * k) * expm1_over_z_series(z) / kFourPi;
  }
  return (std::exp(z) - 1.0) / (kFourPi * R);
}

ComplexDyadic dyadic_G(double k, const Vec3& r, const Vec3& r_src) {
  if (k == 0.0) {
    throw ParameterError("dyadic_G: k must be non-zero");
  }
  const auto [R, u] = separation(r, r_src);
  const RealDyadic uu = outer_u(u);
  const RealDyadic I = RealDyadic::Identity();
  const Complex e = std::exp(-kI * (k * R));
  const Complex c1 = e / (kFourPi * R);
  const Complex c2 = -kI * e / (kFourPi * R * R * k);
  const Complex c3 = -e / (kFourPi * R * R * R * k * k);
  return c1 * (I - uu).cast<Complex>() + (c2 + c3) * (I - 3.0 * uu).cast<Complex>();
}

ComplexDyadic hessian_g0(const Vec3& r, const Vec3& r_src) {
  const auto [R, u] = separation(r, r_src);
  const RealDyadic m = -(RealDyadic::Identity() - 3.0 * outer_u(u)) / (kFourPi * R * R * R);
  return m.cast<Complex>();
}

ComplexDyadic hessian_g_tilde(double k, const Vec3& r, const Vec3& r_src) {
  const auto [R, u] = separation(r, r_src);
  const RealDyadic uu = outer_u(u);
  const Complex g = std::exp(-kI * (k * R)) / (kFourPi * R);
  const Complex q = cancellation_term(k, R);
  return (-(k * k) * g) * uu.cast<Complex>() -
         (q / (kFourPi * R)) * (RealDyadic::Identity() - 3.0 * uu).cast<Complex>();
}

}  // namespace nvie
