#include "nvie/core.hpp"

#include <cmath>
#include <sstream>

namespace nvie {

MaterialParams::MaterialParams(double omega, double mu, double eps_background)
    : omega_(omega), mu_(mu), eps_background_(eps_background) {
  if (!(omega > 0.0) || !(mu > 0.0) || !(eps_background > 0.0) || !std::isfinite(omega) ||
      !std::isfinite(mu) || !std::isfinite(eps_background)) {
    throw ParameterError("MaterialParams: omega, mu and eps_background must be positive and finite");
  }
}

ReferenceNodeSet reference_nodes(int m) {
  if (m < 1 || m > 16) {
    throw ParameterError("reference_nodes: m must be in [1, 16], got " + std::to_string(m));
  }
  ReferenceNodeSet set;
  set.m = m;
  set.rule = gauss_legendre_1d(m);
  const auto& x = set.rule.nodes;
  const auto& w = set.rule.weights;
  set.nodes.reserve(static_cast<std::size_t>(m * m * m));
  set.weights_std.reserve(static_cast<std::size_t>(m * m * m));
  for (int iz = 0; iz < m; ++iz) {
    for (int iy = 0; iy < m; ++iy) {
      for (int ix = 0; ix < m; ++ix) {
        set.nodes.emplace_back(x[static_cast<std::size_t>(ix)], x[static_cast<std::size_t>(iy)],
                               x[static_cast<std::size_t>(iz)]);
        set.weights_std.push_back(w[static_cast<std::size_t>(ix)] *
                                  w[static_cast<std::size_t>(iy)] *
                                  w[static_cast<std::size_t>(iz)]);
      }
    }
  }
  return set;
}

bool Element::contains(const Vec3& p, double rel_tol) const {
  const double half = 0.5 * a * (1.0 + rel_tol);
  return std::abs(p.x() - center.x()) <= half && std::abs(p.y() - center.y()) <= half &&
         std::abs(p.z() - center.z()) <= half;
}

Element make_element(const Vec3& center, double a, const ReferenceNodeSet& nodes,
                     const ContrastFunction& delta_eps_fn) {
  if (!(a > 0.0)) {
    throw GeometryError("element edge must be positive");
  }
  Element e;
  e.center = center;
  e.a = a;
  e.node_positions.reserve(nodes.nodes.size());
  e.delta_eps.reserve(nodes.nodes.size());
  for (const Vec3& ref : nodes.nodes) {
    e.node_positions.push_back(e.to_physical(ref));
    e.delta_eps.push_back(delta_eps_fn ? delta_eps_fn(e.node_positions.back()) : Complex{});
  }
  return e;
}

Mesh::Mesh(int m, std::vector<Element> elements)
    : nodes_(reference_nodes(m)), elements_(std::move(elements)) {
  if (elements_.empty()) {
    throw GeometryError("mesh must contain at least one element");
  }
  for (const Element& e : elements_) {
    if (static_cast<int>(e.node_positions.size()) != nodes_.size()) {
      throw GeometryError("element node count does not match m^3");
    }
  }
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    for (std::size_t j = i + 1; j < elements_.size(); ++j) {
      const Element& a = elements_[i];
      const Element& b = elements_[j];
      const double reach = 0.5 * (a.a + b.a);
      const double sep = (a.center - b.center).cwiseAbs().maxCoeff();
      if (sep < reach * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "elements " << i << " and " << j << " overlap";
        throw GeometryError(os.str());
      }
    }
  }
}

int Mesh::locate(const Vec3& p) const {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (elements_[i].contains(p)) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

Mesh build_mesh(const Vec3& domain_min, const Vec3& domain_max,
                const std::array<int, 3>& n_per_axis, int m,
                const ContrastFunction& delta_eps_fn) {
  for (int a = 0; a < 3; ++a) {
    if (!(domain_max[a] > domain_min[a])) {
      throw GeometryError("build_mesh: domain_max must exceed domain_min componentwise");
    }
    if (n_per_axis[static_cast<std::size_t>(a)] < 1) {
      throw GeometryError("build_mesh: at least one element per axis is required");
    }
  }
  Vec3 edge;
  for (int a = 0; a < 3; ++a) {
    edge[a] = (domain_max[a] - domain_min[a]) / n_per_axis[static_cast<std::size_t>(a)];
  }
  const double h = edge.x();
  if (std::abs(edge.y() - h) > 1e-12 * h || std::abs(edge.z() - h) > 1e-12 * h) {
    std::ostringstream os;
    os << "build_mesh: cells are " << edge.x() << " x " << edge.y() << " x " << edge.z()
       << ", not cubes";
    throw GeometryError(os.str());
  }
  const ReferenceNodeSet nodes = reference_nodes(m);
  std::vector<Element> elements;
  for (int iz = 0; iz < n_per_axis[2]; ++iz) {
    for (int iy = 0; iy < n_per_axis[1]; ++iy) {
      for (int ix = 0; ix < n_per_axis[0]; ++ix) {
        const Vec3 center(domain_min.x() + (ix + 0.5) * edge.x(),
                          domain_min.y() + (iy + 0.5) * edge.y(),
                          domain_min.z() + (iz + 0.5) * edge.z());
        elements.push_back(make_element(center, h, nodes, delta_eps_fn));
      }
    }
  }
  return Mesh(m, std::move(elements));
}

Mesh mesh_from_centers(const std::vector<Vec3>& centers, double a, int m,
                       const ContrastFunction& delta_eps_fn) {
  const ReferenceNodeSet nodes = reference_nodes(m);
  std::vector<Element> elements;
  elements.reserve(centers.size());
  for (const Vec3& c : centers) {
    elements.push_back(make_element(c, a, nodes, delta_eps_fn));
  }
  return Mesh(m, std::move(elements));
}

Mesh build_array_mesh(const Vec3& first_center, double a, double gap,
                      const std::array<int, 3>& counts, int m,
                      const ContrastFunction& delta_eps_fn) {
  if (gap < 0.0) {
    throw GeometryError("build_array_mesh: gap must be non-negative");
  }
  std::vector<Vec3> centers;
  const double pitch = a + gap;
  for (int iz = 0; iz < counts[2]; ++iz) {
    for (int iy = 0; iy < counts[1]; ++iy) {
      for (int ix = 0; ix < counts[0]; ++ix) {
        centers.push_back(first_center + pitch * Vec3(ix, iy, iz));
      }
    }
  }
  return mesh_from_centers(centers, a, m, delta_eps_fn);
}

ContrastFunction constant_contrast(Complex value) {
  return [value](const Vec3&) { return value; };
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::corruption: return "corruption";
    case ErrorKind::format: return "format";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::solver: return "solver";
    case ErrorKind::domain: return "domain";
    case ErrorKind::misuse: return "misuse";
  }
  return "unknown";
}

}  // namespace nvie
