#include <doctest.h>

#include "nvie/core.hpp"
#include "nvie/error.hpp"

using namespace nvie;

TEST_SUITE("core") {
  TEST_CASE("material parameters reject non-positive values") {
    CHECK_THROWS_AS(MaterialParams(0.0, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(MaterialParams(1.0, -1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(MaterialParams(1.0, 1.0, std::nan("")), ParameterError);
    const MaterialParams p(2.0, 1.0, 4.0);
    CHECK(p.k() == doctest::Approx(4.0));
  }

  TEST_CASE("reference nodes are tensor Gauss points with x fastest") {
    for (int m = 1; m <= 8; ++m) {
      const ReferenceNodeSet s = reference_nodes(m);
      REQUIRE(s.size() == m * m * m);
      double wsum = 0.0;
      for (double w : s.weights_std) wsum += w;
      CHECK(wsum == doctest::Approx(8.0).epsilon(1e-13));
      for (int j = 0; j < s.size(); ++j) {
        const auto t = s.triple(j);
        CHECK(s.index(t[0], t[1], t[2]) == j);
        CHECK(s.nodes[static_cast<std::size_t>(j)].x() == s.rule.nodes[static_cast<std::size_t>(t[0])]);
      }
    }
    CHECK_THROWS_AS(reference_nodes(0), ParameterError);
    CHECK_THROWS_AS(reference_nodes(17), ParameterError);
  }

  TEST_CASE("grid mesh maps nodes into each cell") {
    const Mesh mesh = build_mesh(Vec3(0, 0, 0), Vec3(2, 1, 1), {2, 1, 1}, 3, constant_contrast(4.0));
    CHECK(mesh.element_count() == 2);
    CHECK(mesh.node_count() == 54);
    for (const Element& e : mesh.elements()) {
      CHECK(e.a == doctest::Approx(1.0));
      for (const Vec3& p : e.node_positions) CHECK(e.contains(p));
      CHECK(e.delta_eps[0] == Complex(4.0));
    }
    CHECK(mesh.locate(Vec3(1.5, 0.5, 0.5)) == 1);
    CHECK(mesh.locate(Vec3(3.0, 0.5, 0.5)) == -1);
    CHECK(mesh.flat_index(1, 2) == 29);
  }

  TEST_CASE("non-cubic cells and overlaps are geometry errors") {
    CHECK_THROWS_AS(build_mesh(Vec3(0, 0, 0), Vec3(2, 1, 1), {1, 1, 1}, 3, constant_contrast(1.0)),
                    GeometryError);
    CHECK_THROWS_AS(mesh_from_centers({Vec3(0, 0, 0), Vec3(0.5, 0, 0)}, 1.0, 2, constant_contrast(1.0)),
                    GeometryError);
  }

  TEST_CASE("array mesh spacing is edge plus gap") {
    const Mesh mesh = build_array_mesh(Vec3::Constant(0.25), 0.5, 0.25, {3, 3, 1}, 2,
                                       constant_contrast(16.0));
    CHECK(mesh.element_count() == 9);
    CHECK(mesh.element(1).center.x() == doctest::Approx(1.0));
    CHECK(mesh.element(3).center.y() == doctest::Approx(1.0));
    CHECK(mesh.locate(Vec3(0.6, 0.25, 0.25)) == -1);
  }
}
