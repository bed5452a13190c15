#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <type_traits>
#include <vector>

#include "fastdeco/errors.hpp"
#include "fastdeco/geometry.hpp"
#include "fastdeco/quadrature.hpp"
#include "fastdeco/random.hpp"
#include "fastdeco/xsection.hpp"

namespace fastdeco {

enum class BathDistribution { MaxwellBoltzmann, Frozen };

struct BathSpec {
  SpaceDim d{3};
  double mass = 0;         // kg
  double temperature = 0;  // K
  double density = 0;      // 1/m^d
  BathDistribution distribution = BathDistribution::MaxwellBoltzmann;

  // k_T^2 = m_B k_B T / hbar^2, the per-axis variance of the bath wavenumber.
  // Zero for a frozen bath.
  double thermal_k2() const;
  void validate() const;
};

struct ParticleSpec {
  double mass = 0;  // kg
  Vec k0;           // initial wavenumber, 1/m
};

struct KinematicPair {
  double mass_S;
  double mass_B;

  double reduced_mass() const { return mass_S * mass_B / (mass_S + mass_B); }
  double total_mass() const { return mass_S + mass_B; }
  // k = (m_B k_S - m_S k_B) / M
  Vec relative_k(const Vec& k_S, const Vec& k_B) const;
  // v = hbar k / m
  Vec relative_v(const Vec& k) const;
};

struct BathScheme {
  enum class Kind { Auto, Quadrature, MonteCarlo };
  Kind kind = Kind::Auto;
  int order = 16;               // Gauss-Hermite nodes per axis
  std::size_t samples = 200000; // Monte-Carlo samples
  std::uint64_t seed = 1;

  static BathScheme quadrature(int order) {
    return {Kind::Quadrature, order, 0, 0};
  }
  static BathScheme monte_carlo(std::size_t n, std::uint64_t seed) {
    return {Kind::MonteCarlo, 0, n, seed};
  }
};

namespace detail {

inline bool all_finite(double x) { return std::isfinite(x); }
template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x) {
  return x.allFinite();
}

[[noreturn]] void throw_propagation(const Vec& k_B);

template <class F>
using average_t = std::decay_t<decltype(std::declval<F&>()(std::declval<const Vec&>()))>;

template <class F>
auto checked_call(F& f, const Vec& k_B) {
  average_t<F> v = f(k_B);
  if (!all_finite(v)) throw_propagation(k_B);
  return v;
}

}  // namespace detail

// Average of f(k_B) over the bath wavenumber distribution. f may return a
// scalar, a vector or a matrix. A frozen bath returns f(0).
template <class F>
auto bath_average(F&& f, const BathSpec& bath, const BathScheme& scheme = {}) {
  using R = detail::average_t<F>;
  const int d = bath.d;
  if (bath.distribution == BathDistribution::Frozen) {
    return R(detail::checked_call(f, Vec::Zero(d)));
  }
  const double kT = std::sqrt(bath.thermal_k2());
  auto kind = scheme.kind;
  if (kind == BathScheme::Kind::Auto)
    kind = d <= 3 ? BathScheme::Kind::Quadrature : BathScheme::Kind::MonteCarlo;

  if (kind == BathScheme::Kind::MonteCarlo) {
    RandomStream rng(scheme.seed);
    Vec k(d);
    rng.fill_normal(k.data(), d);
    k *= kT;
    R acc = detail::checked_call(f, k);
    for (std::size_t i = 1; i < scheme.samples; ++i) {
      rng.fill_normal(k.data(), d);
      k *= kT;
      acc += detail::checked_call(f, k);
    }
    return R(acc / static_cast<double>(scheme.samples));
  }

  const Rule1D& gh = gauss_hermite(scheme.order);
  const int n = scheme.order;
  std::vector<int> idx(d, 0);
  Vec k(d);
  bool first = true;
  R acc{};
  for (;;) {
    double w = 1;
    for (int a = 0; a < d; ++a) {
      k(a) = kT * gh.x[idx[a]];
      w *= gh.w[idx[a]];
    }
    if (first) {
      acc = w * detail::checked_call(f, k);
      first = false;
    } else {
      acc += w * detail::checked_call(f, k);
    }
    int a = 0;
    while (a < d && ++idx[a] == n) idx[a++] = 0;
    if (a == d) break;
  }
  return acc;
}

struct McEstimate {
  double mean;
  double std_error;
};

// Plain Monte-Carlo average of a scalar with its standard error.
template <class F>
McEstimate bath_average_mc(F&& f, const BathSpec& bath, std::size_t n,
                           RandomStream& rng) {
  const int d = bath.d;
  const double kT = std::sqrt(bath.thermal_k2());
  Vec k(d);
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rng.fill_normal(k.data(), d);
    k *= kT;
    double v = detail::checked_call(f, k);
    s += v;
    s2 += v * v;
  }
  double mean = s / n;
  double var = std::max(0.0, s2 / n - mean * mean);
  return {mean, std::sqrt(var / (n > 1 ? n - 1 : 1))};
}

struct Rates {
  double total = 0, tr = 0, qpar = 0, qperp = 0;
  double get(Moment m) const;
};

// alpha_mu(k_S) = < n v sigma_mu(k) >_B
double collisional_rate(Moment mu, const CrossSectionModel& model,
                        const ParticleSpec& particle, const BathSpec& bath,
                        const Vec& k_S, const BathScheme& scheme = {});

// All four rates in one pass over the bath.
Rates collisional_rates(const CrossSectionModel& model,
                        const ParticleSpec& particle, const BathSpec& bath,
                        const Vec& k_S, const BathScheme& scheme = {});

// Kramers-Moyal moments with the bath average factorized (smooth sigma).
Vec km_drift(const CrossSectionModel& model, const ParticleSpec& particle,
             const BathSpec& bath, const Vec& k_S,
             const BathScheme& scheme = {});
Matrix km_diffusion(const CrossSectionModel& model,
                    const ParticleSpec& particle, const BathSpec& bath,
                    const Vec& k_S, const BathScheme& scheme = {});

// Same moments from rates already in hand.
Vec km_drift(const Rates& r, const KinematicPair& kin, const Vec& k_S);
Matrix km_diffusion(const Rates& r, const KinematicPair& kin,
                    const BathSpec& bath, const Vec& k_S);

// Moments without the factorization: the bath average is taken over the full
// scattering integral at each relative wavenumber.
Vec km_drift_exact(const CrossSectionModel& model,
                   const ParticleSpec& particle, const BathSpec& bath,
                   const Vec& k_S, const BathScheme& scheme = {});
Matrix km_diffusion_exact(const CrossSectionModel& model,
                          const ParticleSpec& particle, const BathSpec& bath,
                          const Vec& k_S, const BathScheme& scheme = {});

// Monte-Carlo residual of <Omega (x) Omega> with Omega = cos(theta) Omega0 +
// sin(theta) Omega_perp against cos^2 Omega0 Omega0 + sin^2 (1 - Omega0
// Omega0)/(d - 1). Uses antithetic +/- Omega_perp pairs; returns the largest
// absolute entry of the difference.
double angular_tensor_check(SpaceDim d, double theta, std::size_t n,
                            RandomStream& rng);

struct TransportCoefficients {
  int d = 3;
  double alpha_tr = 0;  // 1/s
  double eta = 0;       // energy friction, 1/s
  double zeta = 0;      // momentum friction, 1/s
  double gamma = 0;     // directional diffusivity, 1/s
  double xi = 0;        // wavenumber diffusivity, 1/(m^2 s)
};

TransportCoefficients transport_coefficients(const CrossSectionModel& model,
                                             const ParticleSpec& particle,
                                             const BathSpec& bath,
                                             const Vec& k_S,
                                             const BathScheme& scheme = {});

// Coefficients for a given alpha_tr (e.g. calibrated from a range).
TransportCoefficients coefficients_from_alpha_tr(double alpha_tr,
                                                 double mass_S,
                                                 const BathSpec& bath);

// eta = v S / (2 E). S = 0 gives 0; negative S or nonpositive E, v throw.
double eta_from_stopping(double stopping_power, double mean_energy,
                         double mean_speed);

// alpha_tr, alpha_qpar, alpha_qperp tabulated against |k_S| on a uniform
// grid and interpolated linearly. Rates only depend on |k_S| because the
// bath is isotropic.
class RateTable {
public:
  RateTable(const CrossSectionModel& model, const ParticleSpec& particle,
            const BathSpec& bath, double k_max, int points,
            const BathScheme& scheme = {});
  // Same rates at every |k_S|.
  static RateTable constant(const Rates& r);

  Rates at(double k_norm) const;

private:
  RateTable() = default;
  double k_max_ = 0;
  std::vector<Rates> rows_;
};

}  // namespace fastdeco
