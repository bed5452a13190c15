#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "fastdeco/bath.hpp"
#include "fastdeco/geometry.hpp"

namespace fastdeco {

// <k>(t) = k0 exp(-zeta t)
Vec mean_momentum(const Vec& k0, double zeta, double t);

// (v0 / zeta)(1 - exp(-zeta t)); v0 t when zeta = 0.
double traveled_distance(double v0, double zeta, double t);
// v0 / zeta; infinity when zeta = 0.
double stopping_range(double v0, double zeta);

// <k^2>(t) = (k0^2 - d xi/eta) exp(-2 eta t) + d xi/eta; k0^2 + 2 d xi t
// when eta = 0.
double mean_square_momentum(double k0_norm2, double eta, double xi, int d,
                            double t);

struct VarianceSplit {
  double Kpar2 = 0;
  double Kperp2 = 0;
  double K2 = 0;  // Kpar2 + (d - 1) Kperp2
};

// Closed-form longitudinal and transverse variances. Throws DomainError if
// zeta < eta.
VarianceSplit variance_split(double k0_norm2, double eta, double zeta,
                             double xi, int d, double t);

// Total variance <k^2> - |<k>|^2 in closed form (no cancellation).
double total_variance(double k0_norm2, double eta, double zeta, double xi,
                      int d, double t);

// Variances from the full second-moment equations of the Fokker-Planck
// dynamics, which keep the transfer from transverse to longitudinal spread
// caused by the directional diffusion. Requires eta > 0.
VarianceSplit variance_split_exact(double k0_norm2, double eta, double gamma,
                                   double xi, int d, double t);

struct CoherenceState {
  double l_par = 0;
  double l_perp = 0;
  double l_thermal = std::numeric_limits<double>::quiet_NaN();
  double ratio = 0;  // l_par / l_perp
  double angular_variance = std::numeric_limits<double>::quiet_NaN();
  bool par_infinite = false;   // plane wave along k0
  bool perp_infinite = false;
};

// l = 1 / (2 sqrt(K^2)); a zero variance is flagged as infinite length.
// l_thermal and mean_k2 are optional and only copied / used for the
// angular variance.
CoherenceState coherence_lengths(
    double Kpar2, double Kperp2,
    double l_thermal = std::numeric_limits<double>::quiet_NaN(),
    double mean_k2 = std::numeric_limits<double>::quiet_NaN());

// hbar / (2 sqrt(m_S k_B T))
double thermal_coherence_length(double mass_S, double temperature);

// Short-time l_par / l_perp: sqrt(1 + d/(d-1) v0^2 / <v_B^2>).
double short_time_ratio(double v0, double vB_rms, int d);

// Kperp2 / <k^2>
double angular_variance(double Kperp2, double mean_k2);

struct MomentState {
  double t = 0;
  Vec mean_k;
  double mean_k2 = 0;
  double Kpar2 = 0;
  double Kperp2 = 0;
  double K2 = 0;
  double traveled = 0;
  double mean_energy = 0;
};

// Times with eta t log-spaced over [lo, hi].
std::vector<double> log_time_grid(double eta, double lo = 1e-4,
                                  double hi = 10, int points = 100);

MomentState analytic_state(const Vec& k0, double mass_S,
                           const TransportCoefficients& c, double t);
std::vector<MomentState> analytic_trajectory(const Vec& k0, double mass_S,
                                             const TransportCoefficients& c,
                                             const std::vector<double>& times);

// Coefficients as a function of the current mean wavenumber.
using CoefficientProvider = std::function<TransportCoefficients(const Vec&)>;

// Integrates the moment equations with RK4, re-evaluating the coefficients
// at <k> every step. `max_step_factor` bounds the step to that fraction of
// 1/zeta.
std::vector<MomentState> energy_updating_trajectory(
    const Vec& k0, double mass_S, const CoefficientProvider& provider,
    const std::vector<double>& times, double max_step_factor = 0.01);

struct WignerGaussian {
  Vec mean_k;
  Matrix cov;  // momentum covariance K^2
};

struct WignerGrid {
  int points = 101;   // per axis
  double span = 6.0;  // half-width in standard deviations
};

struct CoherenceMatrixResult {
  Matrix gradient_form;  // int grad f grad f^T / (2 int f^2)
  Matrix hessian_form;   // -int f hess f / (2 int f^2)
  double truncation;     // max |f| on the grid boundary relative to max |f|
};

CoherenceMatrixResult coherence_matrix_from_wigner(const WignerGaussian& w,
                                                   const WignerGrid& grid = {});

}  // namespace fastdeco
