#include "fastdeco/sde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "fastdeco/constants.hpp"
#include "fastdeco/errors.hpp"

namespace fastdeco {

using constants::hbar;

Ensemble::Ensemble(const Vec& k0_, std::size_t n)
    : k0(k0_), d_(static_cast<int>(k0_.size())), n_(n),
      k_(n * k0_.size()), r_(n * k0_.size(), 0.0) {
  if (d_ < 2) throw DomainError("ensemble needs d >= 2");
  for (std::size_t i = 0; i < n; ++i)
    std::copy(k0_.data(), k0_.data() + d_, k_.data() + i * d_);
}

namespace {

std::size_t block_count(std::size_t n) {
  return (n + kBlockSize - 1) / kBlockSize;
}

// Runs fn(b) for every block b, spreading blocks over threads. Each block
// only touches its own walkers, so the result is thread-count independent.
template <class Fn>
void for_blocks(std::size_t nblocks, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, nblocks));
  if (threads == 1) {
    for (std::size_t b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < nblocks; b += threads) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

double mean_square(const Ensemble& ens) {
  const int d = ens.dim();
  const std::size_t nb = block_count(ens.size());
  std::vector<double> part(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t end = std::min(ens.size(), (b + 1) * kBlockSize);
    double s = 0;
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      const double* k = ens.k(i);
      for (int a = 0; a < d; ++a) s += k[a] * k[a];
    }
    part[b] = s;
  }
  double s = 0;
  for (double p : part) s += p;
  return s / ens.size();
}

}  // namespace

double max_step(const TransportCoefficients& c, double mean_k2) {
  double rate = std::max(c.zeta, (c.d - 1) * c.gamma);
  if (c.xi > 0) {
    // floor <k^2> at its equilibrium value so a cold start is not rejected
    double k2 = mean_k2;
    if (c.eta > 0) k2 = std::max(k2, c.d * c.xi / c.eta);
    rate = k2 > 0 ? std::max(rate, c.xi / k2)
                  : std::numeric_limits<double>::infinity();
  }
  if (rate == 0) return std::numeric_limits<double>::infinity();
  return 0.01 / rate;
}

void step_walker(double* k, double* r, int d, double dt,
                 const SdeStepSpec& spec, const double* noise) {
  const auto& c = spec.coeffs;
  double kn2 = 0;
  for (int a = 0; a < d; ++a) kn2 += k[a] * k[a];

  // streaming with the velocity at the start of the step
  const double stream =
      spec.integrator == Integrator::ExactOU && c.zeta > 0
          ? -std::expm1(-c.zeta * dt) / c.zeta
          : dt;
  const double vscale = hbar / spec.mass_S * stream;
  for (int a = 0; a < d; ++a) r[a] += vscale * k[a];

  // directional diffusion: rotate by a tangent Gaussian of per-direction
  // variance 2 gamma dt
  if (c.gamma > 0 && kn2 > 0) {
    const double kn = std::sqrt(kn2);
    const double* g = noise + d;
    double gpar = 0;
    for (int a = 0; a < d; ++a) gpar += g[a] * k[a] / kn;
    double w[16];
    double wn2 = 0;
    for (int a = 0; a < d; ++a) {
      w[a] = g[a] - gpar * k[a] / kn;
      wn2 += w[a] * w[a];
    }
    if (wn2 > 0) {
      const double wn = std::sqrt(wn2);
      const double angle = std::sqrt(2 * c.gamma * dt) * wn;
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int a = 0; a < d; ++a) k[a] = ca * k[a] + sa * kn * w[a] / wn;
    }
  }

  // friction and isotropic diffusion
  double decay, amp;
  if (spec.integrator == Integrator::ExactOU) {
    decay = std::exp(-c.eta * dt);
    amp = c.eta > 0 ? std::sqrt(-c.xi * std::expm1(-2 * c.eta * dt) / c.eta)
                    : std::sqrt(2 * c.xi * dt);
  } else {
    decay = 1 - c.eta * dt;
    amp = std::sqrt(2 * c.xi * dt);
  }
  for (int a = 0; a < d; ++a) k[a] = decay * k[a] + amp * noise[a];
}

void step(Ensemble& ens, const SdeStepSpec& spec, RandomStream& rng,
          unsigned threads) {
  const int d = ens.dim();
  if (d > 16) throw DomainError("sde supports d <= 16");
  if (!(spec.dt > 0)) throw DomainError("dt must be > 0");
  if (spec.check_guard) {
    const double limit = max_step(spec.coeffs, mean_square(ens));
    if (spec.dt > limit * (1 + 1e-9)) {
      std::ostringstream os;
      os << "time step " << spec.dt << " s exceeds accuracy guard " << limit
         << " s";
      throw StepRejected(os.str());
    }
  }
  RandomStream step_rng = rng.next_substream();
  const std::size_t nb = block_count(ens.size());
  for_blocks(nb, threads, [&](std::size_t b) {
    RandomStream local = step_rng.split(b);
    std::vector<double> noise(2 * d);
    const std::size_t end = std::min(ens.size(), (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      local.fill_normal(noise.data(), noise.size());
      step_walker(ens.k(i), ens.r(i), d, spec.dt, spec, noise.data());
    }
  });
  ens.t += spec.dt;
}

EnsembleStats ensemble_stats(const Ensemble& ens, unsigned threads) {
  const int d = ens.dim();
  const std::size_t n = ens.size();
  const std::size_t nb = block_count(n);
  const double dn = static_cast<double>(n);
  Vec e = ens.k0;
  if (e.norm() > 0) e.normalize();
  else e = Vec::Unit(d, 0);

  // first pass: means
  struct P1 {
    Vec k;
    double k2 = 0, k4 = 0, x = 0, x2 = 0;
  };
  std::vector<P1> p1(nb);
  for_blocks(nb, threads, [&](std::size_t b) {
    P1 p;
    p.k = Vec::Zero(d);
    const std::size_t end = std::min(n, (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      Eigen::Map<const Vec> k(ens.k(i), d), r(ens.r(i), d);
      const double k2 = k.squaredNorm();
      const double x = r.dot(e);
      p.k += k;
      p.k2 += k2;
      p.k4 += k2 * k2;
      p.x += x;
      p.x2 += x * x;
    }
    p1[b] = std::move(p);
  });
  P1 tot;
  tot.k = Vec::Zero(d);
  for (const auto& p : p1) {
    tot.k += p.k;
    tot.k2 += p.k2;
    tot.k4 += p.k4;
    tot.x += p.x;
    tot.x2 += p.x2;
  }
  EnsembleStats s;
  s.t = ens.t;
  s.n = n;
  s.mean_k = tot.k / dn;
  s.mean_k2 = tot.k2 / dn;
  s.mean_k2_se = std::sqrt(std::max(0.0, tot.k4 / dn - s.mean_k2 * s.mean_k2) / dn);
  s.traveled = tot.x / dn;
  s.traveled_se = std::sqrt(std::max(0.0, tot.x2 / dn - s.traveled * s.traveled) / dn);

  Vec u = s.mean_k;
  if (u.norm() > 1e-9 * std::sqrt(s.mean_k2)) u.normalize();
  else u = e;

  // second pass: centered moments
  struct P2 {
    Matrix cov;
    double p2 = 0, p4 = 0, y = 0, y2 = 0;
  };
  std::vector<P2> p2(nb);
  for_blocks(nb, threads, [&](std::size_t b) {
    P2 p;
    p.cov = Matrix::Zero(d, d);
    const std::size_t end = std::min(n, (b + 1) * kBlockSize);
    Vec x(d);
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      x = Eigen::Map<const Vec>(ens.k(i), d) - s.mean_k;
      p.cov.noalias() += x * x.transpose();
      const double xp = x.dot(u);
      const double xp2 = xp * xp;
      const double y = x.squaredNorm() - xp2;
      p.p2 += xp2;
      p.p4 += xp2 * xp2;
      p.y += y;
      p.y2 += y * y;
    }
    p2[b] = std::move(p);
  });
  P2 c;
  c.cov = Matrix::Zero(d, d);
  for (const auto& p : p2) {
    c.cov += p.cov;
    c.p2 += p.p2;
    c.p4 += p.p4;
    c.y += p.y;
    c.y2 += p.y2;
  }
  const double dn1 = n > 1 ? dn - 1 : 1;
  s.cov = c.cov / dn1;
  s.mean_k_se = (s.cov.diagonal() / dn).cwiseSqrt();
  const double m2 = c.p2 / dn, m4 = c.p4 / dn;
  s.Kpar2 = c.p2 / dn1;
  s.Kpar2_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / dn);
  const double ym = c.y / dn;
  s.Kperp2 = c.y / dn1 / (d - 1);
  s.Kperp2_se = std::sqrt(std::max(0.0, c.y2 / dn - ym * ym) / dn) / (d - 1);
  return s;
}

Trajectory run(const Vec& k0, const SdeStepSpec& spec,
               const std::vector<double>& checkpoints, std::size_t n,
               RandomStream& rng, unsigned threads) {
  Ensemble ens(k0, n);
  Trajectory traj;
  for (double tc : checkpoints) {
    if (tc < ens.t - 1e-12 * std::abs(tc))
      throw DomainError("checkpoints must be nondecreasing");
    while (ens.t < tc * (1 - 1e-12)) {
      SdeStepSpec s = spec;
      const double remaining = tc - ens.t;
      if (remaining < spec.dt) {
        // a short final step stays within the guard that spec.dt passed
        if (spec.check_guard) {
          const double limit = max_step(spec.coeffs, mean_square(ens));
          if (spec.dt > limit * (1 + 1e-9)) {
            std::ostringstream os;
            os << "time step " << spec.dt << " s exceeds accuracy guard "
               << limit << " s";
            throw StepRejected(os.str());
          }
        }
        s.dt = remaining;
        s.check_guard = false;
      }
      step(ens, s, rng, threads);
      ++traj.steps;
    }
    ens.t = tc;
    traj.points.push_back(ensemble_stats(ens, threads));
  }
  return traj;
}

Trajectory run(const ParticleSpec& particle, const BathSpec& bath,
               const CrossSectionModel& model, double t_end, std::size_t n,
               double dt, RandomStream& rng, unsigned threads) {
  SdeStepSpec spec;
  spec.dt = dt;
  spec.mass_S = particle.mass;
  spec.coeffs = transport_coefficients(model, particle, bath, particle.k0);
  std::vector<double> cps;
  const int m = 20;
  for (int i = 1; i <= m; ++i) cps.push_back(t_end * i / m);
  return run(particle.k0, spec, cps, n, rng, threads);
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

EquilibriumReport equilibrium_check(const Ensemble& ens, double mass_S,
                                    double temperature) {
  const int d = ens.dim();
  const std::size_t n = ens.size();
  EquilibriumReport rep;
  rep.expected_variance =
      mass_S * constants::boltzmann * temperature / (hbar * hbar);
  const auto st = ensemble_stats(ens);
  const double sd = std::sqrt(rep.expected_variance);
  std::vector<double> x(n);
  for (int a = 0; a < d; ++a) {
    double m4 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ens.k(i)[a];
      const double c = x[i] - st.mean_k(a);
      m4 += c * c * c * c;
    }
    m4 /= n;
    const double var = st.cov(a, a);
    const double se = std::sqrt(std::max(0.0, m4 - var * var) / n);
    rep.variance_ratio.push_back(var / rep.expected_variance);
    rep.variance_z.push_back(se > 0 ? (var - rep.expected_variance) / se : 0);
    std::sort(x.begin(), x.end());
    double D = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double F = normal_cdf(x[i] / sd);
      D = std::max({D, std::abs(F - static_cast<double>(i) / n),
                    std::abs(static_cast<double>(i + 1) / n - F)});
    }
    rep.ks_distance.push_back(D);
  }
  const double var_mean = st.cov.trace() / d;
  rep.mean_z = st.mean_k.norm() / std::sqrt(var_mean / n);
  rep.par_perp_ratio = st.Kpar2 / st.Kperp2;
  return rep;
}

void full_a2_step(Ensemble& ens, const RateTable& rates,
                  const KinematicPair& kin, const BathSpec& bath, double dt,
                  RandomStream& rng, const FullA2Options& opt) {
  const int d = ens.dim();
  const double M = kin.total_mass();
  const double fb = kin.mass_B / M;
  const double fs2 = (kin.mass_S / M) * (kin.mass_S / M);
  const double kT2 = bath.thermal_k2();
  const double vscale = hbar / kin.mass_S * dt;
  RandomStream step_rng = rng.next_substream();
  const std::size_t nb = block_count(ens.size());
  for_blocks(nb, opt.threads, [&](std::size_t b) {
    RandomStream local = step_rng.split(b);
    Vec g(d);
    const std::size_t end = std::min(ens.size(), (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < end; ++i) {
      Eigen::Map<Vec> k(ens.k(i), d), r(ens.r(i), d);
      local.fill_normal(g.data(), d);
      r += vscale * k;
      const double kn = k.norm();
      Rates a = rates.at(kn);
      if (opt.forward_approximation) {
        a.qpar = 0;
        a.qperp = 2 * a.tr;
      }
      const double thermal = 2 * a.tr * fs2 * kT2;
      const double lpar = a.qpar * fb * fb * kn * kn + thermal;
      const double lperp = a.qperp * fb * fb * kn * kn / (d - 1) + thermal;
      Vec inc = std::sqrt(lperp) * g;
      if (kn > 0) {
        const Vec u = k / kn;
        const double gp = u.dot(g);
        inc += (std::sqrt(lpar) - std::sqrt(lperp)) * gp * u;
      }
      k += -fb * a.tr * dt * k + std::sqrt(dt) * inc;
    }
  });
  ens.t += dt;
}

bool km_regime_ok(const CrossSectionModel& model, const ParticleSpec& particle,
                  const BathSpec& bath) {
  const double k_rel =
      bath.mass / (bath.mass + particle.mass) * particle.k0.norm();
  const auto m = model.moments(k_rel > 0 ? k_rel : 1.0);
  const bool forward = m.sigma_total > 0 && m.sigma_tr / m.sigma_total < 0.25;
  return forward || particle.mass / bath.mass > 10;
}

Trajectory run_full_a2(const Vec& k0, const RateTable& rates,
                       const KinematicPair& kin, const BathSpec& bath,
                       double dt, const std::vector<double>& checkpoints,
                       std::size_t n, RandomStream& rng,
                       const FullA2Options& opt, bool km_ok) {
  Ensemble ens(k0, n);
  Trajectory traj;
  traj.km_warning = !km_ok;
  for (double tc : checkpoints) {
    while (ens.t < tc * (1 - 1e-12)) {
      const double h = std::min(dt, tc - ens.t);
      full_a2_step(ens, rates, kin, bath, h, rng, opt);
      ++traj.steps;
    }
    ens.t = tc;
    traj.points.push_back(ensemble_stats(ens, opt.threads));
  }
  return traj;
}

}  // namespace fastdeco
