#include <doctest.h>

#include "nvie/corrections.hpp"
#include "nvie/error.hpp"

using namespace nvie;

TEST_SUITE("corrections") {
  const MaterialParams mat(1.0, 1.0, 1.0);

  TEST_CASE("depolarization dyadic and C") {
    CHECK((l_dyadic_sphere() - ComplexDyadic::Identity() / 3.0).norm() == 0.0);
    CHECK((coefficient_C(3.0) - 2.0 * ComplexDyadic::Identity()).norm() < 1e-15);
  }

  TEST_CASE("exclusion radius scales with the element") {
    const Element e = make_element(Vec3::Zero(), 0.5, reference_nodes(3), constant_contrast(4.0));
    CorrectionConfig cfg;
    cfg.delta = 0.1;
    CHECK(exclusion_radius(e, cfg) == doctest::Approx(0.025));
  }

  TEST_CASE("row evaluation matches per-pair evaluation") {
    const Element e = make_element(Vec3(0.2, 0, 0), kPi, reference_nodes(3), constant_contrast(4.0));
    for (CorrectionForm form : {CorrectionForm::interpolated, CorrectionForm::literal}) {
      CorrectionConfig cfg;
      cfg.delta = 0.1;
      cfg.form = form;
      for (int j : {0, 13, 22}) {
        const auto row = correction_B_row(e, j, mat, cfg);
        for (int m = 0; m < 27; m += 5) {
          const ComplexDyadic slow = correction_terms(e, j, m, mat, cfg).total();
          CHECK((row[static_cast<std::size_t>(m)] - slow).norm() <= 1e-12 * std::max(1.0, slow.norm()));
        }
      }
    }
  }

  TEST_CASE("disabled corrections vanish and zero contrast gives zero") {
    const Element e = make_element(Vec3::Zero(), 1.0, reference_nodes(2), constant_contrast(4.0));
    CorrectionConfig cfg;
    cfg.delta = 0.1;
    cfg.enabled = false;
    CHECK(correction_B(e, 0, 1, mat, cfg).norm() == 0.0);
    const Element z = make_element(Vec3::Zero(), 1.0, reference_nodes(2), constant_contrast(0.0));
    cfg.enabled = true;
    for (const auto& b : correction_B_row(z, 3, mat, cfg)) CHECK(b.norm() < 1e-300);
  }

  TEST_CASE("smooth-part terms shrink like the ball volume") {
    const Element e = make_element(Vec3::Zero(), 2.0, reference_nodes(3), constant_contrast(4.0));
    CorrectionConfig a, b;
    a.delta = 0.1;
    b.delta = 0.05;
    const CorrectionTerms ta = correction_terms(e, 13, 13, mat, a);
    const CorrectionTerms tb = correction_terms(e, 13, 13, mat, b);
    // int g over a ball of radius r is O(r^2).
    CHECK(ta.B1.norm() / tb.B1.norm() == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("ball leaving the element is a geometry error") {
    const Element e = make_element(Vec3::Zero(), 1.0, reference_nodes(5), constant_contrast(4.0));
    CorrectionConfig cfg;
    cfg.delta = 0.1;
    CHECK_THROWS_AS(correction_B_row(e, 0, mat, cfg), GeometryError);
  }
}
