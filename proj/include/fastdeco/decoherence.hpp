#pragma once

#include <complex>
#include <functional>

#include "fastdeco/bath.hpp"

namespace fastdeco {

struct DecoherenceRate {
  double re = 0;  // 1/s
  double im = 0;  // 1/s
  Vec s;          // separation, m
  double residual = 0;  // |F_N - F_2N| of the final refinement

  std::complex<double> value() const { return {re, im}; }
};

struct DecoherenceOptions {
  int min_order = 64;
  double nodes_per_radian = 4;  // polar nodes grow as k |s| * this
  int max_order = 1 << 16;
  double rtol = 1e-8;
  double atol = 1e-12;  // relative to the total collision rate
  BathScheme scheme{};
};

// Average of exp(i k sin(theta) Omega_perp . s_perp) over the transverse unit
// sphere of dimension d - 2, as a function of a = k sin(theta) |s_perp|:
// cos(a) for d = 2, J0(a) for d = 3, sin(a)/a for d = 4.
double transverse_average(int d, double a);
// 1 - transverse_average(d, a), accurate for small a.
double one_minus_transverse_average(int d, double a);

// F(s) = < n v int dsigma (1 - exp(i q . s)) >_B with q = k (Omega - Omega0).
// Throws ToleranceError if the polar rule cannot resolve the oscillation
// within options.max_order nodes.
DecoherenceRate decoherence_rate(const CrossSectionModel& model,
                                 const ParticleSpec& particle,
                                 const BathSpec& bath, const Vec& s,
                                 const DecoherenceOptions& opt = {});

// rho(s, t) = exp(-F(s) t) rho(s, 0)
std::complex<double> offdiagonal_decay(
    const std::function<std::complex<double>(const Vec&)>& rho0,
    const CrossSectionModel& model, const ParticleSpec& particle,
    const BathSpec& bath, const Vec& s, double t,
    const DecoherenceOptions& opt = {});
std::complex<double> offdiagonal_decay(std::complex<double> rho0_s,
                                       const DecoherenceRate& F, double t);

// W_tot = < n v sigma(k) >_B
double total_collision_rate(const CrossSectionModel& model,
                            const ParticleSpec& particle, const BathSpec& bath,
                            const BathScheme& scheme = {});

struct WeakScattering {
  double k_lscat;  // k_{S,0} / (n sigma)
  bool satisfied;  // k_lscat > threshold
};

// sigma evaluated at the relative wavenumber of a bath particle at rest.
WeakScattering weak_scattering(const CrossSectionModel& model,
                               const ParticleSpec& particle,
                               const BathSpec& bath, double threshold = 10);

}  // namespace fastdeco
