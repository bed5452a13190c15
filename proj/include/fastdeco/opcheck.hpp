#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fastdeco/geometry.hpp"

namespace fastdeco {

// Uniform cubic grid [-L, L]^d in momentum space with the origin on a node.
struct MomentumGrid {
  int d = 3;
  int n = 0;       // nodes per axis
  double h = 0;    // spacing
  double lo = 0;   // coordinate of node 0 on every axis

  long size() const;
  Vec point(long index) const;
};

MomentumGrid make_grid(int d, double half_width, double h);

using Field = std::vector<double>;
using ScalarFunction = std::function<double(const Vec&)>;

Field sample(const MomentumGrid& g, const ScalarFunction& f);

// Nodes closer than this many spacings to the boundary carry no operator
// output (the nested first-derivative stencil reaches four nodes out).
inline constexpr int kStencilMargin = 4;

// (1/2) sum L^2 f = -k^2 Lap f + (k.grad)^2 f + (d - 2) k.grad f, with
// k.grad applied twice through a nested fourth-order stencil.
// Throws GridError if |f| > 1e-10 on the boundary strip.
Field apply_LL(const Field& f, const MomentumGrid& g);

// k^2 Lap f - k_i k_j d_ij f - (d - 1) k.grad f with direct fourth-order
// second and mixed derivative stencils.
Field apply_spherical_laplacian(const Field& f, const MomentumGrid& g);

// -d_i d_j [(k^2 delta_ij - k_i k_j) f] - (d - 1) d_i (k_i f): the double
// commutator [r_i, [r_j, .]] written in the momentum-diagonal representation.
Field commutator_rhs(const Field& f, const MomentumGrid& g);

// Max |a - b| over interior nodes outside the ball |k| <= exclusion. The
// radius is fixed in k units so coarse and fine grids cover the same region.
double residual_norm(const Field& a, const Field& b, const MomentumGrid& g,
                     double exclusion = 0.5);
double max_abs(const Field& a, const MomentumGrid& g, double exclusion = 0.5);

// Max-norm difference between apply_LL and commutator_rhs.
double commutator_identity_check(const Field& f, const MomentumGrid& g);

struct OpTestFunction {
  std::string name;
  ScalarFunction f;
  double eigenvalue;  // of (1/2) L.L; NaN if not an eigenfunction
  bool radial;
};

// Fixed suite: a radial shell, low-order harmonics on a shell and
// off-centre anisotropic blobs, all negligible near the origin and boundary.
std::vector<OpTestFunction> op_test_suite(int d);

struct OpCheckRow {
  std::string check;
  std::string function;
  int d = 0;
  double h = 0;  // coarse spacing; fine is h/2
  double coarse = 0;
  double fine = 0;
  double ratio = 0;
  double scale = 0;  // max |f| (or |lambda f|) for context
  bool pass = false;
};

struct OpCheckConfig {
  double half_width = 5.0;
  double h = 0.12;
  double min_ratio = 12;
  double eigen_rtol = 2e-2;  // fine-grid residual over max(lambda, 1) max|f|
};

OpCheckConfig default_opcheck_config(int d);

// Runs every identity on every suite function at h and h/2.
std::vector<OpCheckRow> run_opcheck(int d, const OpCheckConfig& cfg);

}  // namespace fastdeco
