#include "nvie/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>
#include <iomanip>

namespace nvie {

namespace {

// No upper cap: the integrators refine past 64 points.
GaussRule1D compute_gauss_rule(int n) {
  GaussRule1D rule;
  rule.order = n;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int l = 2; l <= n; ++l) {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    rule.weights[static_cast<std::size_t>(i)] = w;
  }
  if (n % 2 == 1) {
    rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  }
  return rule;
}

const GaussRule1D& cached_gauss_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule1D> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, compute_gauss_rule(n)).first;
  }
  return it->second;
}

GaussRule1D mapped_rule(int n, double a, double b) {
  GaussRule1D rule = cached_gauss_rule(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = mid + half * rule.nodes[static_cast<std::size_t>(i)];
    rule.weights[static_cast<std::size_t>(i)] *= half;
  }
  return rule;
}

int scaled_order(int order, double factor, int level) {
  return static_cast<int>(std::ceil(order * std::pow(factor, level) - 1e-9));
}

template <class T>
void hash_bytes(std::uint64_t& h, const T& value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
}

}  // namespace

GaussRule1D gauss_legendre_1d(int n) {
  if (n < 1 || n > 64) {
    throw ParameterError("gauss_legendre_1d: order must be in [1, 64], got " + std::to_string(n));
  }
  return cached_gauss_rule(n);
}

GaussRule1D gauss_legendre_on(int n, double a, double b) {
  if (n < 1) {
    throw ParameterError("gauss_legendre_on: order must be positive");
  }
  return mapped_rule(n, a, b);
}

LagrangeBasis1D::LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  inv_denominators_.assign(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    double den = 1.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) {
        den *= nodes_[a] - nodes_[b];
      }
    }
    inv_denominators_[a] = 1.0 / den;
  }
}

void LagrangeBasis1D::evaluate(double x, std::span<double> out) const {
  const std::size_t n = nodes_.size();
  for (std::size_t a = 0; a < n; ++a) {
    double v = inv_denominators_[a];
    for (std::size_t b = 0; b < n; ++b) {
      if (b != a) {
        v *= x - nodes_[b];
      }
    }
    out[a] = v;
  }
}

double LagrangeBasis1D::value(int a, double x) const {
  double v = inv_denominators_[static_cast<std::size_t>(a)];
  for (int b = 0; b < size(); ++b) {
    if (b != a) {
      v *= x - nodes_[static_cast<std::size_t>(b)];
    }
  }
  return v;
}

double LagrangeBasis1D::derivative(int a, double x) const {
  double sum = 0.0;
  for (int skip = 0; skip < size(); ++skip) {
    if (skip == a) {
      continue;
    }
    double v = inv_denominators_[static_cast<std::size_t>(a)];
    for (int b = 0; b < size(); ++b) {
      if (b != a && b != skip) {
        v *= x - nodes_[static_cast<std::size_t>(b)];
      }
    }
    sum += v;
  }
  return sum;
}

TensorLagrangeBasis::TensorLagrangeBasis(int m)
    : m_(m), basis1d_(compute_gauss_rule(m).nodes) {
  if (m < 1 || m > 16) {
    throw ParameterError("TensorLagrangeBasis: m must be in [1, 16]");
  }
}

void TensorLagrangeBasis::evaluate(const Vec3& x, std::span<double> out) const {
  std::array<double, 16> lx{}, ly{}, lz{};
  basis1d_.evaluate(x.x(), std::span<double>(lx.data(), static_cast<std::size_t>(m_)));
  basis1d_.evaluate(x.y(), std::span<double>(ly.data(), static_cast<std::size_t>(m_)));
  basis1d_.evaluate(x.z(), std::span<double>(lz.data(), static_cast<std::size_t>(m_)));
  std::size_t idx = 0;
  for (int c = 0; c < m_; ++c) {
    for (int b = 0; b < m_; ++b) {
      const double yz = ly[static_cast<std::size_t>(b)] * lz[static_cast<std::size_t>(c)];
      for (int a = 0; a < m_; ++a) {
        out[idx++] = lx[static_cast<std::size_t>(a)] * yz;
      }
    }
  }
}

std::vector<double> TensorLagrangeBasis::evaluate(const Vec3& x) const {
  std::vector<double> out(static_cast<std::size_t>(size()));
  evaluate(x, out);
  return out;
}

std::vector<double> lagrange_basis_3d(int m, const Vec3& x) {
  return TensorLagrangeBasis(m).evaluate(x);
}

void BruteForceResolution::validate() const {
  if (n_radial < 2 || n_polar < 2 || n_azimuthal < 2 || n_outer < 2) {
    throw ParameterError("BruteForceResolution: all orders must be >= 2");
  }
  if (!(rel_tol > 0.0 && rel_tol <= 1e-4)) {
    throw ParameterError("BruteForceResolution: rel_tol must lie in (0, 1e-4]");
  }
  if (!(radial_ratio > 1.0) || !(admissibility > 0.0) || !(refinement_factor > 1.0)) {
    throw ParameterError(
        "BruteForceResolution: radial_ratio and refinement_factor must exceed 1, admissibility "
        "must be positive");
  }
  if (max_refinements < 1) {
    throw ParameterError("BruteForceResolution: max_refinements must be >= 1");
  }
}

BruteForceResolution BruteForceResolution::refined(int level) const {
  BruteForceResolution r = *this;
  r.n_radial = scaled_order(n_radial, refinement_factor, level);
  r.n_polar = scaled_order(n_polar, refinement_factor, level);
  r.n_azimuthal = scaled_order(n_azimuthal, refinement_factor, level);
  r.n_outer = scaled_order(n_outer, refinement_factor, level);
  return r;
}

std::uint64_t BruteForceResolution::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  hash_bytes(h, n_radial);
  hash_bytes(h, n_polar);
  hash_bytes(h, n_azimuthal);
  hash_bytes(h, n_outer);
  hash_bytes(h, radial_ratio);
  hash_bytes(h, admissibility);
  hash_bytes(h, refinement_factor);
  hash_bytes(h, rel_tol);
  hash_bytes(h, max_refinements);
  return h;
}

std::string BruteForceResolution::hash_hex() const {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash();
  return os.str();
}

BruteForceResolution default_ball_resolution() {
  BruteForceResolution res;
  res.n_radial = 16;
  res.n_polar = 16;
  res.n_azimuthal = 32;
  return res;
}

namespace detail {

void check_interior_ball(const Vec3& center, double delta) {
  if (!(delta > 0.0)) {
    throw GeometryError("exclusion radius must be positive");
  }
  for (int a = 0; a < 3; ++a) {
    const double room = 1.0 - std::abs(center[a]);
    if (!(delta < room)) {
      std::ostringstream os;
      os << "exclusion ball of radius " << delta << " around (" << center.x() << ", "
         << center.y() << ", " << center.z() << ") is not strictly inside [-1,1]^3";
      throw GeometryError(os.str());
    }
  }
}

}  // namespace detail

CubeMinusBallRule::CubeMinusBallRule(const Vec3& center, double delta,
                                     const BruteForceResolution& res)
    : center_(center), delta_(delta), half_width_(0.0) {
  detail::check_interior_ball(center, delta);
  half_width_ = std::min({1.0 - std::abs(center.x()), 1.0 - std::abs(center.y()),
                          1.0 - std::abs(center.z())});
  box_rule_ = cached_gauss_rule(res.n_outer);
  build_rays(res);
  build_boxes(res);
}

void CubeMinusBallRule::build_rays(const BruteForceResolution& res) {
  const double s = half_width_;
  std::vector<std::pair<double, double>> panels;
  for (double lo = delta_; lo < s;) {
    double hi = std::min(lo * res.radial_ratio, s);
    // Avoid a sliver panel right below s.
    if (hi < s && s - hi < 0.25 * (hi - lo)) {
      hi = s;
    }
    panels.emplace_back(lo, hi);
    lo = hi;
  }
  std::vector<double> fixed_r, fixed_w;
  for (const auto& [lo, hi] : panels) {
    const GaussRule1D g = mapped_rule(res.n_radial, lo, hi);
    fixed_r.insert(fixed_r.end(), g.nodes.begin(), g.nodes.end());
    fixed_w.insert(fixed_w.end(), g.weights.begin(), g.weights.end());
  }
  const GaussRule1D& t1_rule = cached_gauss_rule(res.n_polar);
  const GaussRule1D& t2_rule = cached_gauss_rule(res.n_azimuthal);
  rays_.reserve(static_cast<std::size_t>(6 * res.n_polar * res.n_azimuthal));
  for (int axis = 0; axis < 3; ++axis) {
    const int o1 = (axis + 1) % 3;
    const int o2 = (axis + 2) % 3;
    for (double sign : {-1.0, 1.0}) {
      for (int i = 0; i < t1_rule.order; ++i) {
        for (int j = 0; j < t2_rule.order; ++j) {
          Vec3 v = Vec3::Zero();
          v[axis] = sign;
          v[o1] = t1_rule.nodes[static_cast<std::size_t>(i)];
          v[o2] = t2_rule.nodes[static_cast<std::size_t>(j)];
          const double len = v.norm();
          const double solid = t1_rule.weights[static_cast<std::size_t>(i)] *
                               t2_rule.weights[static_cast<std::size_t>(j)] / (len * len * len);
          RaySegment ray;
          ray.direction = v / len;
          ray.radius = fixed_r;
          ray.weight.resize(fixed_w.size());
          for (std::size_t q = 0; q < fixed_w.size(); ++q) {
            ray.weight[q] = fixed_w[q] * solid;
          }
          const double exit = s * len;
          if (exit > s * (1.0 + 1e-14)) {
            const GaussRule1D g = mapped_rule(res.n_radial, s, exit);
            for (int q = 0; q < g.order; ++q) {
              ray.radius.push_back(g.nodes[static_cast<std::size_t>(q)]);
              ray.weight.push_back(g.weights[static_cast<std::size_t>(q)] * solid);
            }
          }
          rays_.push_back(std::move(ray));
        }
      }
    }
  }
}

void CubeMinusBallRule::build_boxes(const BruteForceResolution& res) {
  const double s = half_width_;
  std::array<std::array<double, 4>, 3> cuts{};
  for (int a = 0; a < 3; ++a) {
    cuts[static_cast<std::size_t>(a)] = {-1.0, center_[a] - s, center_[a] + s, 1.0};
  }
  for (int iz = 0; iz < 3; ++iz) {
    for (int iy = 0; iy < 3; ++iy) {
      for (int ix = 0; ix < 3; ++ix) {
        if (ix == 1 && iy == 1 && iz == 1) {
          continue;
        }
        const std::array<int, 3> idx{ix, iy, iz};
        QuadBox box;
        bool empty = false;
        for (int a = 0; a < 3; ++a) {
          const auto& c = cuts[static_cast<std::size_t>(a)];
          box.lo[a] = c[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
          box.hi[a] = c[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] + 1)];
          if (box.hi[a] - box.lo[a] <= 1e-14) {
            empty = true;
          }
        }
        if (!empty) {
          subdivide(box, res.admissibility);
        }
      }
    }
  }
}

void CubeMinusBallRule::subdivide(const QuadBox& box, double admissibility) {
  Vec3 nearest;
  for (int a = 0; a < 3; ++a) {
    nearest[a] = std::clamp(center_[a], box.lo[a], box.hi[a]);
  }
  const double dist = (nearest - center_).norm();
  const Vec3 extent = box.hi - box.lo;
  std::array<bool, 3> split{};
  bool any = false;
  for (int a = 0; a < 3; ++a) {
    split[static_cast<std::size_t>(a)] = extent[a] > admissibility * dist;
    any = any || split[static_cast<std::size_t>(a)];
  }
  if (!any) {
    boxes_.push_back(box);
    return;
  }
  const Vec3 mid = 0.5 * (box.lo + box.hi);
  const int nx = split[0] ? 2 : 1;
  const int ny = split[1] ? 2 : 1;
  const int nz = split[2] ? 2 : 1;
  for (int iz = 0; iz < nz; ++iz) {
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        QuadBox child = box;
        const std::array<int, 3> idx{ix, iy, iz};
        for (int a = 0; a < 3; ++a) {
          if (split[static_cast<std::size_t>(a)]) {
            if (idx[static_cast<std::size_t>(a)] == 0) {
              child.hi[a] = mid[a];
            } else {
              child.lo[a] = mid[a];
            }
          }
        }
        subdivide(child, admissibility);
      }
    }
  }
}

std::size_t CubeMinusBallRule::point_count() const {
  std::size_t count = 0;
  for (const RaySegment& ray : rays_) {
    count += ray.radius.size();
  }
  const auto n = static_cast<std::size_t>(box_rule_.order);
  return count + boxes_.size() * n * n * n;
}

BallRule::BallRule(const Vec3& center, double radius, const BruteForceResolution& res)
    : center_(center), radius_(radius) {
  const GaussRule1D radial = mapped_rule(res.n_radial, 0.0, radius);
  const GaussRule1D& polar = cached_gauss_rule(res.n_polar);
  const double dphi = 2.0 * kPi / res.n_azimuthal;
  nodes_.reserve(static_cast<std::size_t>(res.n_radial * res.n_polar * res.n_azimuthal));
  for (int ip = 0; ip < res.n_azimuthal; ++ip) {
    const double phi = dphi * (ip + 0.5);
    for (int it = 0; it < polar.order; ++it) {
      const double ct = polar.nodes[static_cast<std::size_t>(it)];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      const Vec3 dir(st * std::cos(phi), st * std::sin(phi), ct);
      for (int ir = 0; ir < radial.order; ++ir) {
        const double r = radial.nodes[static_cast<std::size_t>(ir)];
        nodes_.push_back({r, ct, phi, dir,
                          radial.weights[static_cast<std::size_t>(ir)] * r * r *
                              polar.weights[static_cast<std::size_t>(it)] * dphi});
      }
    }
  }
}

}  // namespace nvie
