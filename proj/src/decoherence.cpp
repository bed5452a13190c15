#include "fastdeco/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fastdeco/constants.hpp"

namespace fastdeco {

using constants::hbar;

double transverse_average(int d, double a) {
  a = std::abs(a);
  if (d == 2) return std::cos(a);
  if (a == 0) return 1;
  if (d == 3) return std::cyl_bessel_j(0.0, a);
  if (d == 4) return std::sin(a) / a;
  const double nu = 0.5 * (d - 3);
  return std::tgamma(nu + 1) * std::pow(2 / a, nu) * std::cyl_bessel_j(nu, a);
}

double one_minus_transverse_average(int d, double a) {
  a = std::abs(a);
  if (a > 0.5) return 1 - transverse_average(d, a);
  if (d == 2) {
    const double h = std::sin(0.5 * a);
    return 2 * h * h;
  }
  // power series: Gamma(nu+1) sum_m (-1)^m (a^2/4)^m / (m! Gamma(m+nu+1))
  const double nu = 0.5 * (d - 3);
  const double x = 0.25 * a * a;
  double term = 1, sum = 0;
  for (int m = 1; m < 30; ++m) {
    term *= -x / (m * (m + nu));
    sum -= term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

namespace {

struct NodeSum {
  double re = 0, im = 0, w = 0;
};

struct CapExceeded {
  int nodes;
};

// Angular integral for one relative wavenumber. `scale` multiplies the node
// count; throws CapExceeded past opt.max_order.
NodeSum angular_sum(const CrossSectionModel& model, const Vec& k_vec,
                    const Vec& s, const DecoherenceOptions& opt, int scale,
                    int& nodes_used) {
  const int d = model.dim();
  const double k = k_vec.norm();
  NodeSum out;
  if (k == 0) return out;
  const Vec u = k_vec / k;
  const double s_par = s.dot(u);
  const double s_perp = std::sqrt(std::max(0.0, s.squaredNorm() - s_par * s_par));
  const double phase = k * s.norm();
  int n = std::max(opt.min_order,
                   static_cast<int>(std::ceil(opt.nodes_per_radian * phase)));
  n *= scale;
  if (n > opt.max_order) throw CapExceeded{n};
  nodes_used = std::max(nodes_used, n);
  const auto quad = polar_quadrature_spread(SpaceDim(d), n, model.breakpoints());
  for (const auto& node : quad.nodes) {
    const double f = model.evaluate(k, node.theta) * node.solid_angle;
    const double h = std::sin(0.5 * node.theta);
    const double phi = -2 * h * h * k * s_par;  // k (cos - 1) s_par
    const double a = k * std::sin(node.theta) * s_perp;
    const double lam = transverse_average(d, a);
    const double hp = std::sin(0.5 * phi);
    // 1 - cos(phi) Lambda, split to keep small separations accurate
    const double re = 2 * hp * hp + std::cos(phi) * one_minus_transverse_average(d, a);
    out.re += f * re;
    out.im -= f * std::sin(phi) * lam;
    out.w += f;
  }
  return out;
}

}  // namespace

DecoherenceRate decoherence_rate(const CrossSectionModel& model,
                                 const ParticleSpec& particle,
                                 const BathSpec& bath, const Vec& s,
                                 const DecoherenceOptions& opt) {
  const int d = bath.d;
  if (s.size() != d || particle.k0.size() != d || model.dim() != d)
    throw DomainError("dimension mismatch in decoherence_rate");
  const KinematicPair kin{particle.mass, bath.mass};
  DecoherenceRate r;
  r.s = s;
  if (s.squaredNorm() == 0) return r;

  auto evaluate = [&](int scale, int& nodes) {
    auto f = [&](const Vec& k_B) -> Vec {
      const Vec k = kin.relative_k(particle.k0, k_B);
      const double nv = bath.density * hbar * k.norm() / kin.reduced_mass();
      NodeSum a = angular_sum(model, k, s, opt, scale, nodes);
      Vec v(3);
      v << nv * a.re, nv * a.im, nv * a.w;
      return v;
    };
    return Vec(bath_average(f, bath, opt.scheme));
  };

  int scale = 1;
  int nodes = 0;
  double diff = std::numeric_limits<double>::infinity();
  try {
    Vec coarse = evaluate(scale, nodes);
    for (;;) {
      nodes = 0;
      Vec fine = evaluate(2 * scale, nodes);
      diff = std::hypot(fine(0) - coarse(0), fine(1) - coarse(1));
      const double mag = std::hypot(fine(0), fine(1));
      r.re = fine(0);
      r.im = fine(1);
      r.residual = diff;
      if (diff <= opt.rtol * mag + opt.atol * fine(2)) return r;
      coarse = fine;
      scale *= 2;
    }
  } catch (const CapExceeded& cap) {
    std::ostringstream os;
    os << "decoherence rate not converged at |s| = " << s.norm() << ": "
       << cap.nodes << " polar nodes needed, cap is " << opt.max_order
       << "; residual " << diff;
    throw ToleranceError(os.str(), diff);
  }
}

std::complex<double> offdiagonal_decay(std::complex<double> rho0_s,
                                       const DecoherenceRate& F, double t) {
  if (!(t >= 0)) throw DomainError("offdiagonal_decay needs t >= 0");
  if (t == 0) return rho0_s;
  return std::exp(-F.value() * t) * rho0_s;
}

std::complex<double> offdiagonal_decay(
    const std::function<std::complex<double>(const Vec&)>& rho0,
    const CrossSectionModel& model, const ParticleSpec& particle,
    const BathSpec& bath, const Vec& s, double t,
    const DecoherenceOptions& opt) {
  if (!(t >= 0)) throw DomainError("offdiagonal_decay needs t >= 0");
  if (t == 0) return rho0(s);
  return offdiagonal_decay(rho0(s),
                           decoherence_rate(model, particle, bath, s, opt), t);
}

double total_collision_rate(const CrossSectionModel& model,
                            const ParticleSpec& particle, const BathSpec& bath,
                            const BathScheme& scheme) {
  return collisional_rates(model, particle, bath, particle.k0, scheme).total;
}

WeakScattering weak_scattering(const CrossSectionModel& model,
                               const ParticleSpec& particle,
                               const BathSpec& bath, double threshold) {
  const double k0 = particle.k0.norm();
  const double k_rel = bath.mass / (bath.mass + particle.mass) * k0;
  const double sigma = model.moments(k_rel).sigma_total;
  WeakScattering w;
  w.k_lscat = k0 / (bath.density * sigma);
  w.satisfied = w.k_lscat > threshold;
  return w;
}

}  // namespace fastdeco
