#pragma once

#include <cstddef>
#include <vector>

#include "fastdeco/bath.hpp"
#include "fastdeco/kinetics.hpp"
#include "fastdeco/random.hpp"

namespace fastdeco {

// N walkers in momentum (k) and position (r) space, stored walker-major.
class Ensemble {
public:
  Ensemble(const Vec& k0, std::size_t n);

  int dim() const { return d_; }
  std::size_t size() const { return n_; }
  double* k(std::size_t i) { return k_.data() + i * d_; }
  const double* k(std::size_t i) const { return k_.data() + i * d_; }
  double* r(std::size_t i) { return r_.data() + i * d_; }
  const double* r(std::size_t i) const { return r_.data() + i * d_; }

  double t = 0;
  Vec k0;  // initial wavenumber; defines the reference direction

private:
  int d_;
  std::size_t n_;
  std::vector<double> k_, r_;
};

enum class Integrator {
  ExactOU,        // exact Ornstein-Uhlenbeck update, exact-in-mean streaming
  EulerMaruyama,  // first-order drift and frozen-velocity streaming
};

struct SdeStepSpec {
  double dt = 0;
  TransportCoefficients coeffs;
  double mass_S = 0;
  Integrator integrator = Integrator::ExactOU;
  bool check_guard = true;
};

// Walkers per block; each block draws from its own split stream so results
// do not depend on the number of threads.
inline constexpr std::size_t kBlockSize = 4096;

// Largest dt allowed by the accuracy guard
// dt <= 0.01 / max(zeta, (d-1) gamma, xi / <k^2>).
double max_step(const TransportCoefficients& c, double mean_k2);

// Advance one walker by `dt` using 2d pre-drawn standard normals: the first
// d for the isotropic diffusion, the next d for the tangent rotation.
void step_walker(double* k, double* r, int d, double dt,
                 const SdeStepSpec& spec, const double* noise);

// One step of the whole ensemble. Throws StepRejected if spec.dt violates
// the guard.
void step(Ensemble& ens, const SdeStepSpec& spec, RandomStream& rng,
          unsigned threads = 1);

struct EnsembleStats {
  double t = 0;
  std::size_t n = 0;
  Vec mean_k, mean_k_se;
  double mean_k2 = 0, mean_k2_se = 0;
  double Kpar2 = 0, Kpar2_se = 0;    // variance along <k>
  double Kperp2 = 0, Kperp2_se = 0;  // per transverse direction
  double traveled = 0, traveled_se = 0;  // <r> projected on k0
  Matrix cov;
};

EnsembleStats ensemble_stats(const Ensemble& ens, unsigned threads = 1);

struct Trajectory {
  std::vector<EnsembleStats> points;
  bool km_warning = false;
  std::size_t steps = 0;
};

// Integrate from all walkers at k0, r = 0, recording statistics at each
// checkpoint (times in seconds, nondecreasing). Steps are shortened to land
// on checkpoints.
Trajectory run(const Vec& k0, const SdeStepSpec& spec,
               const std::vector<double>& checkpoints, std::size_t n,
               RandomStream& rng, unsigned threads = 1);

// Convenience: coefficients evaluated at k0 from the scattering model.
Trajectory run(const ParticleSpec& particle, const BathSpec& bath,
               const CrossSectionModel& model, double t_end, std::size_t n,
               double dt, RandomStream& rng, unsigned threads = 1);

struct EquilibriumReport {
  double expected_variance = 0;         // m_S k_B T / hbar^2
  std::vector<double> variance_ratio;   // per axis
  std::vector<double> variance_z;       // per axis, (var - expected) / se
  double mean_z = 0;                    // |<k>| / sqrt(var / N)
  std::vector<double> ks_distance;      // per axis vs N(0, expected)
  double par_perp_ratio = 0;            // Kpar2 / Kperp2
};

EquilibriumReport equilibrium_check(const Ensemble& ens, double mass_S,
                                    double temperature);

struct FullA2Options {
  bool forward_approximation = false;  // sigma_qpar = 0, sigma_qperp = 2 sigma_tr
  unsigned threads = 1;
};

// Kramers-Moyal step with drift A1 and Gaussian increments of covariance
// A2 dt, rates looked up at each walker's |k|.
void full_a2_step(Ensemble& ens, const RateTable& rates,
                  const KinematicPair& kin, const BathSpec& bath, double dt,
                  RandomStream& rng, const FullA2Options& opt = {});

// sigma_tr / sigma < 0.25 or m_S / m_B > 10
bool km_regime_ok(const CrossSectionModel& model, const ParticleSpec& particle,
                  const BathSpec& bath);

Trajectory run_full_a2(const Vec& k0, const RateTable& rates,
                       const KinematicPair& kin, const BathSpec& bath,
                       double dt, const std::vector<double>& checkpoints,
                       std::size_t n, RandomStream& rng,
                       const FullA2Options& opt = {}, bool km_ok = true);

}  // namespace fastdeco
