#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "nvie/error.hpp"
#include "nvie/types.hpp"

namespace nvie {

struct GaussRule1D {
  int order = 0;
  std::vector<double> nodes;    // ascending, in (-1, 1)
  std::vector<double> weights;  // positive, sum to 2
};

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n. 1 <= n <= 64.
GaussRule1D gauss_legendre_1d(int n);

/// Same rule affinely mapped to [a, b].
GaussRule1D gauss_legendre_on(int n, double a, double b);

/// Lagrange cardinal polynomials through a fixed set of 1-D nodes.
class LagrangeBasis1D {
 public:
  LagrangeBasis1D() = default;
  explicit LagrangeBasis1D(std::vector<double> nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }

  /// out[a] = l_a(x); out must have size() entries.
  void evaluate(double x, std::span<double> out) const;
  double value(int a, double x) const;
  double derivative(int a, double x) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> inv_denominators_;
};

/// Tensor-product Lagrange basis on the m^3 Gauss nodes of [-1,1]^3. Basis
/// index is ix + m*iy + m*m*iz (x fastest).
class TensorLagrangeBasis {
 public:
  explicit TensorLagrangeBasis(int m);

  int m() const { return m_; }
  int size() const { return m_ * m_ * m_; }
  const LagrangeBasis1D& axis() const { return basis1d_; }

  /// out has size() entries.
  void evaluate(const Vec3& x, std::span<double> out) const;
  std::vector<double> evaluate(const Vec3& x) const;

 private:
  int m_;
  LagrangeBasis1D basis1d_;
};

/// phi_j(x) for every tensor Gauss node j; see TensorLagrangeBasis ordering.
std::vector<double> lagrange_basis_3d(int m, const Vec3& x);

/// Resolution knobs for the brute-force singular integrators.
///
/// Cube-minus-ball: the inner sub-cube is integrated along rays. Ray
/// directions come from the six face pyramids of the sub-cube, each
/// parametrised by a (n_polar x n_azimuthal) Gauss grid on [-1,1]^2. Along
/// each ray Gauss panels of n_radial points are graded geometrically by
/// radial_ratio from delta out to the inscribed radius, plus one panel out to
/// the ray exit. The outer boxes use n_outer^3 tensor Gauss after bisection
/// until every edge is at most admissibility * (distance to the singularity).
///
/// Ball: Gauss in r (n_radial), Gauss in cos(theta) (n_polar), trapezoid in
/// phi (n_azimuthal).
struct BruteForceResolution {
  int n_radial = 14;
  int n_polar = 24;
  int n_azimuthal = 24;
  int n_outer = 10;
  double radial_ratio = 3.0;
  double admissibility = 1.0;
  double refinement_factor = 1.5;
  double rel_tol = 1e-8;
  int max_refinements = 3;

  void validate() const;
  /// Orders scaled by refinement_factor^level.
  BruteForceResolution refined(int level) const;
  /// Stable 64-bit digest of every field, used to tag weight tables.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

/// Default resolution for ball integrals (correction terms).
BruteForceResolution default_ball_resolution();

struct RaySegment {
  Vec3 direction;              // unit vector
  std::vector<double> radius;  // radial nodes
  std::vector<double> weight;  // Gauss weight * solid-angle weight (no r^2)
};

struct QuadBox {
  Vec3 lo;
  Vec3 hi;
};

/// Quadrature layout for the region [-1,1]^3 minus B(center, delta): rays
/// through the inner sub-cube S plus leaf boxes tiling the rest.
class CubeMinusBallRule {
 public:
  CubeMinusBallRule(const Vec3& center, double delta, const BruteForceResolution& res);

  const Vec3& center() const { return center_; }
  double delta() const { return delta_; }
  /// Half-width of the inner sub-cube.
  double inner_half_width() const { return half_width_; }
  const std::vector<RaySegment>& rays() const { return rays_; }
  const std::vector<QuadBox>& boxes() const { return boxes_; }
  const GaussRule1D& box_rule() const { return box_rule_; }

  /// Calls f(point, weight) for every quadrature point. The weight includes
  /// the volume Jacobian.
  template <class F>
  void for_each_point(F&& f) const;

  std::size_t point_count() const;

 private:
  void build_rays(const BruteForceResolution& res);
  void build_boxes(const BruteForceResolution& res);
  void subdivide(const QuadBox& box, double admissibility);

  Vec3 center_;
  double delta_;
  double half_width_;
  std::vector<RaySegment> rays_;
  std::vector<QuadBox> boxes_;
  GaussRule1D box_rule_;
};

/// Spherical product rule on B(center, radius).
class BallRule {
 public:
  BallRule(const Vec3& center, double radius, const BruteForceResolution& res);

  struct Node {
    double r;
    double cos_theta;
    double phi;
    Vec3 direction;
    double weight;  // includes r^2 dr dOmega
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  const Vec3& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vec3 center_;
  double radius_;
  std::vector<Node> nodes_;
};

namespace detail {

template <class T>
T zero_value() {
  if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>) {
    return T{};
  } else {
    return T::Zero();
  }
}

template <class T>
double value_norm(const T& v) {
  if constexpr (std::is_arithmetic_v<T> || std::is_same_v<T, Complex>) {
    return std::abs(v);
  } else {
    return v.cwiseAbs().maxCoeff();
  }
}

template <class T>
bool all_finite(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::isfinite(v);
  } else if constexpr (std::is_same_v<T, Complex>) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  } else {
    return v.allFinite();
  }
}

void check_interior_ball(const Vec3& center, double delta);

}  // namespace detail

template <class F>
void CubeMinusBallRule::for_each_point(F&& f) const {
  for (const RaySegment& ray : rays_) {
    for (std::size_t q = 0; q < ray.radius.size(); ++q) {
      const double r = ray.radius[q];
      f(Vec3(center_ + r * ray.direction), ray.weight[q] * r * r);
    }
  }
  const int n = box_rule_.order;
  for (const QuadBox& box : boxes_) {
    const Vec3 half = 0.5 * (box.hi - box.lo);
    const Vec3 mid = 0.5 * (box.hi + box.lo);
    const double jac = half.x() * half.y() * half.z();
    for (int iz = 0; iz < n; ++iz) {
      for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
          const Vec3 p(mid.x() + half.x() * box_rule_.nodes[ix],
                       mid.y() + half.y() * box_rule_.nodes[iy],
                       mid.z() + half.z() * box_rule_.nodes[iz]);
          f(p, jac * box_rule_.weights[ix] * box_rule_.weights[iy] * box_rule_.weights[iz]);
        }
      }
    }
  }
}

/// Integral over [-1,1]^3 minus B(center, delta) of kernel(r'), repeated at
/// increasing resolution until two successive estimates agree to res.rel_tol.
/// Kernel returns double, Complex, or a fixed-size Eigen matrix.
template <class Kernel>
auto integrate_cube_minus_ball(Kernel&& kernel, const Vec3& center, double delta,
                               const BruteForceResolution& res) {
  using T = std::decay_t<decltype(kernel(std::declval<const Vec3&>()))>;
  res.validate();
  detail::check_interior_ball(center, delta);
  auto estimate = [&](int level) {
    CubeMinusBallRule rule(center, delta, res.refined(level));
    T acc = detail::zero_value<T>();
    rule.for_each_point([&](const Vec3& p, double w) { acc += w * kernel(p); });
    if (!detail::all_finite(acc)) {
      throw AccuracyError("cube-minus-ball integral produced a non-finite value");
    }
    return acc;
  };
  T coarse = estimate(0);
  double rel = 0.0;
  double coarse_norm = detail::value_norm(coarse);
  for (int level = 1; level <= res.max_refinements; ++level) {
    T fine = estimate(level);
    const double change = detail::value_norm(T(fine - coarse));
    rel = change / std::max(detail::value_norm(fine), 1e-300);
    if (rel < res.rel_tol || change == 0.0) {
      return fine;
    }
    coarse_norm = detail::value_norm(coarse);
    coarse = fine;
  }
  throw AccuracyError("cube-minus-ball integral did not converge (relative change " +
                          std::to_string(rel) + ")",
                      coarse_norm, detail::value_norm(coarse), rel);
}

/// Integral over B(center, radius) of kernel(r, theta, phi). The r^2 sin(theta)
/// Jacobian is applied by the integrator.
template <class Kernel>
auto integrate_ball(Kernel&& kernel, const Vec3& center, double radius,
                    const BruteForceResolution& res) {
  using T = std::decay_t<decltype(kernel(0.0, 0.0, 0.0))>;
  if (!(radius > 0.0)) {
    throw ParameterError("integrate_ball: radius must be positive");
  }
  BallRule rule(center, radius, res);
  T acc = detail::zero_value<T>();
  for (const BallRule::Node& node : rule.nodes()) {
    const T sample = node.r * node.r * kernel(node.r, std::acos(node.cos_theta), node.phi);
    if (!detail::all_finite(sample)) {
      throw AccuracyError("integrate_ball: non-finite kernel*r^2 sample at r=" +
                          std::to_string(node.r));
    }
    acc += (node.weight / (node.r * node.r)) * sample;
  }
  return acc;
}

}  // namespace nvie
