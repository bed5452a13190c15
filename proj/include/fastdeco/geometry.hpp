#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastdeco/random.hpp"

namespace fastdeco {

using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Number of spatial dimensions, d >= 2.
class SpaceDim {
public:
  explicit SpaceDim(int d);
  int value() const { return d_; }
  operator int() const { return d_; }

private:
  int d_;
};

// Surface area of the unit sphere in R^d, 2 pi^{d/2} / Gamma(d/2). d >= 1.
double surface_area(int d);

struct AngularNode {
  double theta;        // polar angle from the reference axis
  double weight;       // raw weight of the theta rule
  double solid_angle;  // S_{d-1} * weight * sin(theta)^{d-2}
};

// Rule for integrals over the sphere of functions of the polar angle only:
//   int g(theta) dOmega ~= sum_i solid_angle_i g(theta_i).
struct AngularQuadrature {
  int d = 0;
  int order = 0;
  std::vector<AngularNode> nodes;

  double total_solid_angle() const;
};

// Gauss-Legendre in theta over [0, pi] with `order` nodes.
AngularQuadrature polar_quadrature(SpaceDim d, int order);

// Composite rule: [0, pi] is split at `breaks` (values outside (0, pi) are
// ignored) and each panel gets its own `order`-point Gauss rule.
AngularQuadrature polar_quadrature(SpaceDim d, int order,
                                   std::span<const double> breaks);

// Composite rule with about `total` nodes spread over the panels in
// proportion to their length (at least `min_per_panel` each).
AngularQuadrature polar_quadrature_spread(SpaceDim d, int total,
                                          std::span<const double> breaks,
                                          int min_per_panel = 16);

// Full-direction rule on the unit sphere of R^d.
struct SphereRule {
  Matrix directions;  // d x n, unit columns
  Eigen::VectorXd weights;
};

// Points on the unit sphere of R^dim (dim >= 1), weights summing to S_dim.
// S^1 uses `azimuth_points` equispaced angles; higher spheres recurse with a
// polar Gauss rule of `polar_order` nodes.
SphereRule sphere_rule(int dim, int polar_order, int azimuth_points);

// Product of a polar rule about `axis` with a rule on the transverse sphere.
SphereRule sphere_rule(const AngularQuadrature& polar, const Vec& axis,
                       int sub_polar_order, int azimuth_points);

// Orthonormal basis (columns) whose first column is axis/|axis|.
Matrix orthonormal_basis(const Vec& axis);

// Uniform direction on the unit sphere.
Vec sample_isotropic(SpaceDim d, RandomStream& rng);

// Unit vector orthogonal to unit vector `vhat`, uniform in the tangent space.
Vec random_tangent_direction(const Vec& vhat, RandomStream& rng);

// Rotate v by `angle` towards a uniformly chosen tangent direction. Norm is
// preserved. Throws DomainError for a zero vector.
Vec rotate_in_random_tangent_plane(const Vec& v, double angle,
                                   RandomStream& rng);

}  // namespace fastdeco
