#pragma once

#include <vector>

#include "nvie/core.hpp"
#include "nvie/quadrature.hpp"
#include "nvie/types.hpp"

namespace nvie {

/// How the smooth factor inside the exclusion ball is represented.
///  interpolated: f_m e^{ikR} phi_m(r') with f_m = de_m e^{-ikR_m}, the same
///                interpolant the weight tables integrate outside the ball.
///  literal:      de(r') phi_m(r') with de(r') interpolated from node values.
enum class CorrectionForm { interpolated, literal };

struct CorrectionConfig {
  /// Reference-cube exclusion radius; must equal the weight table's delta.
  double delta = 0.05;
  BruteForceResolution ball_res = default_ball_resolution();
  bool enabled = true;
  CorrectionForm form = CorrectionForm::interpolated;
};

/// Depolarization dyadic of a spherical exclusion volume, I/3.
ComplexDyadic l_dyadic_sphere();

/// I + L * delta_eps = (1 + delta_eps/3) I.
ComplexDyadic coefficient_C(Complex delta_eps);

struct CorrectionTerms {
  ComplexDyadic B1 = ComplexDyadic::Zero();  // omega^2 mu int g
  ComplexDyadic B2 = ComplexDyadic::Zero();  // (omega^2 mu / k^2) int grad grad g~
  ComplexDyadic B3 = ComplexDyadic::Zero();  // (omega^2 mu / k^2) int grad grad g0 [...]
  ComplexDyadic total() const { return B1 + B2 + B3; }
};

/// Physical exclusion radius (a/2) * delta.
double exclusion_radius(const Element& element, const CorrectionConfig& cfg);

/// The three ball integrals for collocation node j and basis node m of one
/// element, evaluated separately. Ignores cfg.enabled.
CorrectionTerms correction_terms(const Element& element, int j, int m,
                                 const MaterialParams& mat, const CorrectionConfig& cfg);

/// B_{jm} = B1 + B2 + B3, or zero when corrections are disabled.
ComplexDyadic correction_B(const Element& element, int j, int m, const MaterialParams& mat,
                           const CorrectionConfig& cfg);

/// B_{jm} for every basis node m at once (one pass over the ball rule).
std::vector<ComplexDyadic> correction_B_row(const Element& element, int j,
                                            const MaterialParams& mat,
                                            const CorrectionConfig& cfg);

}  // namespace nvie
