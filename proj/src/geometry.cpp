#include "fastdeco/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "fastdeco/errors.hpp"
#include "fastdeco/quadrature.hpp"

namespace fastdeco {

using std::numbers::pi;

SpaceDim::SpaceDim(int d) : d_(d) {
  if (d < 2) throw DomainError("space dimension must be >= 2");
}

double surface_area(int d) {
  if (d < 1) throw DomainError("surface_area needs d >= 1");
  return 2 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double AngularQuadrature::total_solid_angle() const {
  double s = 0;
  for (const auto& n : nodes) s += n.solid_angle;
  return s;
}

namespace {

std::vector<double> panel_edges(std::span<const double> breaks) {
  std::vector<double> e{0.0};
  for (double b : breaks) {
    if (b > 1e-12 && b < pi - 1e-12) e.push_back(b);
  }
  e.push_back(pi);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

void append_panel(AngularQuadrature& q, double a, double b, int n) {
  const double s_sub = surface_area(q.d - 1);
  auto r = gauss_legendre(n, a, b);
  for (int i = 0; i < n; ++i) {
    double th = r.x[i];
    double sa = s_sub * r.w[i] * std::pow(std::sin(th), q.d - 2);
    q.nodes.push_back({th, r.w[i], sa});
  }
}

}  // namespace

AngularQuadrature polar_quadrature(SpaceDim d, int order) {
  return polar_quadrature(d, order, {});
}

AngularQuadrature polar_quadrature(SpaceDim d, int order,
                                   std::span<const double> breaks) {
  if (order < 2) throw DomainError("polar quadrature order must be >= 2");
  AngularQuadrature q;
  q.d = d;
  q.order = order;
  auto e = panel_edges(breaks);
  for (std::size_t p = 0; p + 1 < e.size(); ++p)
    append_panel(q, e[p], e[p + 1], order);
  return q;
}

AngularQuadrature polar_quadrature_spread(SpaceDim d, int total,
                                          std::span<const double> breaks,
                                          int min_per_panel) {
  AngularQuadrature q;
  q.d = d;
  q.order = total;
  auto e = panel_edges(breaks);
  for (std::size_t p = 0; p + 1 < e.size(); ++p) {
    double frac = (e[p + 1] - e[p]) / pi;
    int n = std::max(min_per_panel,
                     static_cast<int>(std::ceil(frac * total)));
    append_panel(q, e[p], e[p + 1], n);
  }
  return q;
}

SphereRule sphere_rule(int dim, int polar_order, int azimuth_points) {
  SphereRule r;
  if (dim == 1) {
    r.directions.resize(1, 2);
    r.directions << 1.0, -1.0;
    r.weights = Eigen::VectorXd::Ones(2);
    return r;
  }
  if (dim == 2) {
    const int m = azimuth_points;
    r.directions.resize(2, m);
    r.weights = Eigen::VectorXd::Constant(m, 2 * pi / m);
    for (int i = 0; i < m; ++i) {
      double phi = 2 * pi * (i + 0.5) / m;
      r.directions(0, i) = std::cos(phi);
      r.directions(1, i) = std::sin(phi);
    }
    return r;
  }
  Vec axis = Vec::Zero(dim);
  axis(0) = 1;
  return sphere_rule(polar_quadrature(SpaceDim(dim), polar_order), axis,
                     polar_order, azimuth_points);
}

SphereRule sphere_rule(const AngularQuadrature& polar, const Vec& axis,
                       int sub_polar_order, int azimuth_points) {
  const int d = polar.d;
  if (axis.size() != d) throw DomainError("axis dimension mismatch");
  SphereRule sub = sphere_rule(d - 1, sub_polar_order, azimuth_points);
  const Matrix basis = orthonormal_basis(axis);
  const auto ns = sub.weights.size();
  SphereRule r;
  r.directions.resize(d, polar.nodes.size() * ns);
  r.weights.resize(polar.nodes.size() * ns);
  Eigen::Index col = 0;
  const double s_sub = surface_area(d - 1);
  for (const auto& node : polar.nodes) {
    const double c = std::cos(node.theta), s = std::sin(node.theta);
    for (Eigen::Index j = 0; j < ns; ++j, ++col) {
      Vec local(d);
      local(0) = c;
      local.tail(d - 1) = s * sub.directions.col(j);
      r.directions.col(col) = basis * local;
      // solid_angle already carries S_{d-1}; the sub rule sums to S_{d-1}
      r.weights(col) = node.solid_angle * sub.weights(j) / s_sub;
    }
  }
  return r;
}

Matrix orthonormal_basis(const Vec& axis) {
  const auto d = axis.size();
  const double n = axis.norm();
  if (!(n > 0)) throw DomainError("orthonormal_basis of a zero vector");
  Eigen::HouseholderQR<Matrix> qr(axis / n);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  // Householder may flip the sign of the first column
  if (Q.col(0).dot(axis) < 0) Q.col(0) *= -1;
  return Q;
}

Vec sample_isotropic(SpaceDim d, RandomStream& rng) {
  Vec g(d.value());
  double n2 = 0;
  do {
    rng.fill_normal(g.data(), g.size());
    n2 = g.squaredNorm();
  } while (n2 == 0);
  return g / std::sqrt(n2);
}

Vec random_tangent_direction(const Vec& vhat, RandomStream& rng) {
  Vec g(vhat.size());
  for (;;) {
    rng.fill_normal(g.data(), g.size());
    g -= g.dot(vhat) * vhat;
    double n = g.norm();
    if (n > 1e-12) return g / n;
  }
}

Vec rotate_in_random_tangent_plane(const Vec& v, double angle,
                                   RandomStream& rng) {
  const double n = v.norm();
  if (!(n > 0)) throw DomainError("cannot rotate a zero vector");
  if (v.size() < 2) throw DomainError("rotation needs d >= 2");
  if (angle == 0) return v;
  const Vec vhat = v / n;
  const Vec w = random_tangent_direction(vhat, rng);
  Vec out = n * (std::cos(angle) * vhat + std::sin(angle) * w);
  return out;
}

}  // namespace fastdeco
