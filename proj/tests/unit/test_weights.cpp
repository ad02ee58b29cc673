#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "nvie/error.hpp"
#include "nvie/weights.hpp"

using namespace nvie;
namespace fs = std::filesystem;

namespace {

const WeightTable& table_m3() {
  static const WeightTable t = compute_weight_table(3, 0.1, BruteForceResolution{});
  return t;
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nvie_unit";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("weights") {
  TEST_CASE("orbit representatives") {
    CHECK(orbit_representative(3, 13) == 13);
    const ReferenceNodeSet s = reference_nodes(3);
    // All corners share the (0,0,0) orbit.
    for (int j : {0, 2, 6, 8, 18, 20, 24, 26}) CHECK(orbit_representative(3, j) == 0);
    CHECK(orbit_representative(3, s.index(2, 1, 1)) == orbit_representative(3, s.index(1, 1, 0)));
  }

  TEST_CASE("symmetry-mapped nodes equal direct integration") {
    const WeightTable& t = table_m3();
    const BruteForceResolution res;
    for (int j : {26, 23, 5}) {
      REQUIRE(orbit_representative(3, j) != j);
      const std::vector<double> direct = compute_node_weights(3, 0.1, j, res);
      double max_diff = 0, max_val = 0;
      for (int k = 1; k <= 3; ++k) {
        for (int q = 0; q < 27; ++q) {
          for (int f = 0; f < kWeightFields; ++f) {
            const double a = t.data[t.offset(j, k, q) + static_cast<std::size_t>(f)];
            const double b = direct[(static_cast<std::size_t>(k - 1) * 27 + static_cast<std::size_t>(q)) * kWeightFields +
                                    static_cast<std::size_t>(f)];
            max_diff = std::max(max_diff, std::abs(a - b));
            max_val = std::max(max_val, std::abs(b));
          }
        }
      }
      CHECK(max_diff <= 1e-8 * max_val);
    }
  }

  TEST_CASE("scalar weights sum to the cube-minus-ball integral of 1/R^k") {
    const WeightTable& t = table_m3();
    const ReferenceNodeSet s = reference_nodes(3);
    const int j = 4;
    for (int k = 1; k <= 3; ++k) {
      double sum = 0;
      for (int q = 0; q < 27; ++q) sum += t.scalar(j, k, q);
      const Vec3 c = s.nodes[static_cast<std::size_t>(j)];
      const double ref = integrate_cube_minus_ball(
          [&](const Vec3& y) { return std::pow((y - c).norm(), -k); }, c, 0.1, BruteForceResolution{});
      CHECK(sum == doctest::Approx(ref).epsilon(1e-8));
      // Trace of Lambda equals omega.
      double tr = 0;
      for (int q = 0; q < 27; ++q) tr += t.matrix(j, k, q).trace() - t.scalar(j, k, q);
      CHECK(std::abs(tr) <= 1e-9 * std::abs(sum));
    }
  }

  TEST_CASE("round trip is bit exact") {
    const WeightTable& t = table_m3();
    const fs::path p = temp_path(table_file_name(t.m, t.delta));
    save_table(t, p);
    const WeightTable u = load_table(p);
    CHECK(u.m == t.m);
    CHECK(u.delta == t.delta);
    CHECK(u.resolution_hash == t.resolution_hash);
    CHECK(u.checksum == t.checksum);
    REQUIRE(u.data.size() == t.data.size());
    CHECK(std::memcmp(u.data.data(), t.data.data(), t.data.size() * sizeof(double)) == 0);
    CHECK(table_file_name(3, 0.05) == "weights_m3_d0.05.viewt");
  }

  TEST_CASE("damaged files are detected") {
    const WeightTable& t = table_m3();
    const fs::path good = temp_path("good.viewt");
    save_table(t, good);
    const auto size = fs::file_size(good);

    const fs::path cut = temp_path("cut.viewt");
    fs::copy_file(good, cut, fs::copy_options::overwrite_existing);
    fs::resize_file(cut, size - 100);
    CHECK_THROWS_AS(load_table(cut), CorruptionError);

    const fs::path flipped = temp_path("flipped.viewt");
    fs::copy_file(good, flipped, fs::copy_options::overwrite_existing);
    {
      std::fstream f(flipped, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(static_cast<std::streamoff>(size / 2));
      f.put('\x5a');
    }
    CHECK_THROWS_AS(load_table(flipped), CorruptionError);

    const fs::path version = temp_path("version.viewt");
    {
      std::ifstream in(good, std::ios::binary);
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      bytes.replace(0, 7, "VIEWT 9");
      std::ofstream(version, std::ios::binary) << bytes;
    }
    CHECK_THROWS_AS(load_table(version), FormatError);
    CHECK_THROWS_AS(load_table(temp_path("missing.viewt")), ConfigError);
  }

  TEST_CASE("scaled tables cannot be saved") {
    const WeightTable s = scale_weight_table(table_m3(), 0.5);
    CHECK(s.scalar(13, 1, 0) == doctest::Approx(4.0 * table_m3().scalar(13, 1, 0)));
    CHECK_THROWS_AS(save_table(s, temp_path("scaled.viewt")), MisuseError);
  }

  TEST_CASE("a ball that leaves the cube names the node") {
    try {
      (void)compute_weight_table(5, 0.1, BruteForceResolution{});
      FAIL("expected GeometryError");
    } catch (const GeometryError& e) {
      CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
  }

  TEST_CASE("exactness transfer for polynomial densities") {
    const WeightTable& t = table_m3();
    const ReferenceNodeSet s = reference_nodes(3);
    const int j = s.index(0, 1, 2);
    const Vec3 xj = s.nodes[static_cast<std::size_t>(j)];
    auto poly = [](const Vec3& y) {
      return 1.0 + 0.5 * y.x() - 0.3 * y.y() * y.y() + 0.7 * y.x() * y.y() * y.z() * y.z() + 0.2 * y.z();
    };
    std::vector<Complex> f;
    for (const Vec3& p : s.nodes) f.push_back(poly(p));
    for (int k = 1; k <= 3; ++k) {
      for (int kind = 0; kind < 2; ++kind) {
        KernelRecipe r;
        (kind == 0 ? r.scalar : r.matrix)[static_cast<std::size_t>(k - 1)] = 1.0;
        const RealDyadic w = apply_weights(t, j, f, r).real();
        const RealDyadic ref = integrate_cube_minus_ball(
            [&](const Vec3& y) -> RealDyadic {
              const Vec3 d = y - xj;
              const double R = d.norm();
              const Vec3 u = d / R;
              const RealDyadic K = kind == 0 ? RealDyadic::Identity() : RealDyadic(u * u.transpose());
              return poly(y) * std::pow(R, -k) * K;
            },
            xj, 0.1, BruteForceResolution{});
        CHECK((w - ref).cwiseAbs().maxCoeff() <= 1e-6);
      }
    }
  }
}
