#include "nvie/corrections.hpp"

#include <cmath>
#include <sstream>

#include "nvie/greens.hpp"

namespace nvie {

namespace {

int nodes_per_axis(const Element& element) {
  const int M = static_cast<int>(element.node_positions.size());
  int m = static_cast<int>(std::lround(std::cbrt(static_cast<double>(M))));
  if (m < 1 || m * m * m != M) {
    throw GeometryError("element node count is not a perfect cube");
  }
  return m;
}

void check_ball(const Element& element, int j, const CorrectionConfig& cfg) {
  const Vec3 x = element.to_reference(element.node_positions.at(static_cast<std::size_t>(j)));
  const double room = 1.0 - x.cwiseAbs().maxCoeff();
  if (!(cfg.delta > 0.0) || !(cfg.delta < room)) {
    std::ostringstream os;
    os << "correction ball of reference radius " << cfg.delta << " around node " << j
       << " leaves the element (room " << room << ")";
    throw GeometryError(os.str());
  }
}

RealDyadic static_hessian(const Vec3& u, double rho) {
  return -(RealDyadic::Identity() - 3.0 * u * u.transpose()) / (kFourPi * rho * rho * rho);
}

// Smooth prefactor f_m of the interpolated form.
Complex node_factor(const Element& element, int j, int m, double k) {
  const double R = (element.node_positions[static_cast<std::size_t>(m)] -
                    element.node_positions[static_cast<std::size_t>(j)])
                       .norm();
  return element.delta_eps[static_cast<std::size_t>(m)] * std::exp(-kI * (k * R));
}

}  // namespace

ComplexDyadic l_dyadic_sphere() { return ComplexDyadic::Identity() / 3.0; }

ComplexDyadic coefficient_C(Complex delta_eps) {
  return ComplexDyadic::Identity() + l_dyadic_sphere() * delta_eps;
}

double exclusion_radius(const Element& element, const CorrectionConfig& cfg) {
  return 0.5 * element.a * cfg.delta;
}

CorrectionTerms correction_terms(const Element& element, int j, int m,
                                 const MaterialParams& mat, const CorrectionConfig& cfg) {
  const int n = nodes_per_axis(element);
  const int M = n * n * n;
  if (j < 0 || j >= M || m < 0 || m >= M) {
    throw ParameterError("correction_terms: node index out of range");
  }
  check_ball(element, j, cfg);
  const double k = mat.k();
  const double w2mu = mat.omega() * mat.omega() * mat.mu();
  const double rd = exclusion_radius(element, cfg);
  const Vec3 xj = element.to_reference(element.node_positions[static_cast<std::size_t>(j)]);
  const TensorLagrangeBasis basis(n);
  const BallRule rule(Vec3::Zero(), rd, cfg.ball_res);
  std::vector<double> phi(static_cast<std::size_t>(M));
  const bool literal = cfg.form == CorrectionForm::literal;
  const Complex de_j = element.delta_eps[static_cast<std::size_t>(j)];

  ComplexDyadic s1 = ComplexDyadic::Zero();
  ComplexDyadic s2 = ComplexDyadic::Zero();
  ComplexDyadic s3 = ComplexDyadic::Zero();
  for (const BallRule::Node& node : rule.nodes()) {
    const double rho = node.r;
    const Vec3 offset = rho * node.direction;
    basis.evaluate(xj + (2.0 / element.a) * offset, phi);
    const double pm = phi[static_cast<std::size_t>(m)];
    const double delta_jm = (m == j) ? 1.0 : 0.0;
    const ComplexDyadic Ht = hessian_g_tilde(k, Vec3::Zero(), offset);
    const RealDyadic H0 = static_hessian(node.direction, rho);
    const double w = node.weight;
    if (literal) {
      Complex de{};
      for (int q = 0; q < M; ++q) {
        de += element.delta_eps[static_cast<std::size_t>(q)] * phi[static_cast<std::size_t>(q)];
      }
      s1 += (w * de * pm * scalar_g(k, rho)) * ComplexDyadic::Identity();
      s2 += (w * de * pm) * Ht;
      s3 += (w * (de * pm - de_j * delta_jm)) * H0.cast<Complex>();
    } else {
      const Complex e = std::exp(kI * (k * rho));
      s1 += (w * pm * scalar_g0(rho)) * ComplexDyadic::Identity();
      s2 += (w * e * pm) * Ht;
      s3 += (w * (e * pm - delta_jm)) * H0.cast<Complex>();
    }
  }
  const Complex f = literal ? Complex(1.0) : node_factor(element, j, m, k);
  CorrectionTerms t;
  t.B1 = (w2mu * f) * s1;
  t.B2 = (w2mu / (k * k) * f) * s2;
  t.B3 = (w2mu / (k * k) * f) * s3;
  return t;
}

ComplexDyadic correction_B(const Element& element, int j, int m, const MaterialParams& mat,
                           const CorrectionConfig& cfg) {
  if (!cfg.enabled) {
    return ComplexDyadic::Zero();
  }
  return correction_terms(element, j, m, mat, cfg).total();
}

std::vector<ComplexDyadic> correction_B_row(const Element& element, int j,
                                            const MaterialParams& mat,
                                            const CorrectionConfig& cfg) {
  const int n = nodes_per_axis(element);
  const int M = n * n * n;
  std::vector<ComplexDyadic> row(static_cast<std::size_t>(M), ComplexDyadic::Zero());
  if (!cfg.enabled) {
    return row;
  }
  if (j < 0 || j >= M) {
    throw ParameterError("correction_B_row: node index out of range");
  }
  check_ball(element, j, cfg);
  const double k = mat.k();
  const double w2mu = mat.omega() * mat.omega() * mat.mu();
  const double rd = exclusion_radius(element, cfg);
  const Vec3 xj = element.to_reference(element.node_positions[static_cast<std::size_t>(j)]);
  const TensorLagrangeBasis basis(n);
  const BallRule rule(Vec3::Zero(), rd, cfg.ball_res);
  const bool literal = cfg.form == CorrectionForm::literal;
  const auto P = static_cast<Eigen::Index>(rule.nodes().size());

  // Phi(p, m) = phi_m(y_p); K(p, :) = [scalar, xx, yy, zz, xy, xz, yz].
  Eigen::MatrixXd Phi(P, M);
  Eigen::MatrixXcd K(P, 7);
  RealDyadic h0_sum = RealDyadic::Zero();
  std::vector<double> phi(static_cast<std::size_t>(M));
  Eigen::Map<const Eigen::VectorXcd> de_nodes(element.delta_eps.data(), M);
  for (Eigen::Index p = 0; p < P; ++p) {
    const BallRule::Node& node = rule.nodes()[static_cast<std::size_t>(p)];
    const double rho = node.r;
    const Vec3 offset = rho * node.direction;
    basis.evaluate(xj + (2.0 / element.a) * offset, phi);
    for (int q = 0; q < M; ++q) {
      Phi(p, q) = phi[static_cast<std::size_t>(q)];
    }
    const RealDyadic H0 = static_hessian(node.direction, rho);
    const ComplexDyadic H = hessian_g_tilde(k, Vec3::Zero(), offset) + H0.cast<Complex>();
    h0_sum += node.weight * H0;
    Complex s;
    Complex scalar;
    if (literal) {
      s = Complex{};
      for (int q = 0; q < M; ++q) {
        s += phi[static_cast<std::size_t>(q)] * de_nodes(q);
      }
      scalar = s * scalar_g(k, rho);
    } else {
      s = std::exp(kI * (k * rho));
      scalar = scalar_g0(rho);
    }
    const Complex c = node.weight * s / (k * k);
    K(p, 0) = node.weight * scalar;
    K(p, 1) = c * H(0, 0);
    K(p, 2) = c * H(1, 1);
    K(p, 3) = c * H(2, 2);
    K(p, 4) = c * H(0, 1);
    K(p, 5) = c * H(0, 2);
    K(p, 6) = c * H(1, 2);
  }
  const Eigen::MatrixXd re = Phi.transpose() * K.real();
  const Eigen::MatrixXd im = Phi.transpose() * K.imag();
  Eigen::MatrixXcd moments(M, 7);
  moments.real() = re;
  moments.imag() = im;
  for (int q = 0; q < M; ++q) {
    const Complex f = literal ? Complex(1.0) : node_factor(element, j, q, k);
    ComplexDyadic B;
    B << moments(q, 0) + moments(q, 1), moments(q, 4), moments(q, 5), moments(q, 4),
        moments(q, 0) + moments(q, 2), moments(q, 6), moments(q, 5), moments(q, 6),
        moments(q, 0) + moments(q, 3);
    row[static_cast<std::size_t>(q)] = (w2mu * f) * B;
  }
  row[static_cast<std::size_t>(j)] -= (w2mu / (k * k) * element.delta_eps[static_cast<std::size_t>(j)]) *
                                     h0_sum.cast<Complex>();
  return row;
}

}  // namespace nvie
