#pragma once

#include "nvie/error.hpp"
#include "nvie/types.hpp"

namespace nvie {

/// Below this k*R the splitting terms switch to their Taylor series.
inline constexpr double kSeriesThreshold = 1e-2;
inline constexpr int kSeriesTerms = 12;

/// e^{-ikR} / (4 pi R). Throws SingularityError for R <= 0.
Complex scalar_g(double k, double R);

/// 1 / (4 pi R).
double scalar_g0(double R);

/// g - g0 = (e^{-ikR} - 1) / (4 pi R); total on R >= 0 with limit -ik/(4 pi).
Complex scalar_g_tilde(double k, double R);

/// Homogeneous-medium dyadic Green's function (I + grad grad / k^2) g.
ComplexDyadic dyadic_G(double k, const Vec3& r, const Vec3& r_src);

/// grad grad of 1/(4 pi |r - r_src|) = -(I - 3 u u) / (4 pi R^3).
ComplexDyadic hessian_g0(const Vec3& r, const Vec3& r_src);

/// grad grad (g - g0). Weakly singular (O(1/R)) as r -> r_src.
ComplexDyadic hessian_g_tilde(double k, const Vec3& r, const Vec3& r_src);

/// Unit vector (r_src - r)/R and R. Throws SingularityError when R == 0.
struct Separation {
  double R;
  Vec3 u;
};
Separation separation(const Vec3& r, const Vec3& r_src);

}  // namespace nvie
