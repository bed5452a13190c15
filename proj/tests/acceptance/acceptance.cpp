// One PASS/FAIL line per acceptance criterion, with wall time against its
// budget. Exit status is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fastdeco/bath.hpp"
#include "fastdeco/constants.hpp"
#include "fastdeco/decoherence.hpp"
#include "fastdeco/kinetics.hpp"
#include "fastdeco/opcheck.hpp"
#include "fastdeco/random.hpp"
#include "fastdeco/scenario.hpp"
#include "fastdeco/sde.hpp"
#include "fastdeco/xsection.hpp"

using namespace fastdeco;
namespace c = fastdeco::constants;

namespace {

const std::string kDir = FASTDECO_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failed;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failed += " [failed: " + what + "]";
    }
  }
};

int failures = 0;

void criterion(int id, const char* name, double budget_s,
               const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.failed += std::string(" [exception: ") + e.what() + "]";
  }
  const double dt =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = dt < budget_s;
  const bool ok = o.pass && in_time;
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s%s | runtime %.2f s (limit %.0f s%s)\n", ok ? "PASS" : "FAIL",
              id, name, o.detail.str().c_str(), o.failed.c_str(), dt, budget_s,
              in_time ? "" : ", exceeded");
  std::fflush(stdout);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Vec unit_direction(int d, double angle) {
  Vec v = Vec::Zero(d);
  v(0) = std::cos(angle);
  v(1) = std::sin(angle);
  return v;
}

}  // namespace

int main() {
  criterion(1, "short-time coherence ratio", 1, [](Outcome& o) {
    const double v0 = 0.052 * c::speed_of_light;
    const double vB = c::speed_of_light / 137;
    BathSpec bath;
    bath.d = SpaceDim(3);
    bath.mass = c::electron_mass;
    bath.temperature = bath.mass * vB * vB / (3 * c::boltzmann);
    bath.density = 1e25;
    const double mS = 3727.3794066e6 * c::electron_volt /
                      (c::speed_of_light * c::speed_of_light);
    const auto coeffs = coefficients_from_alpha_tr(1e12, mS, bath);
    Vec k0 = Vec::Zero(3);
    k0(0) = mS * v0 / c::hbar;
    const auto s = analytic_state(k0, mS, coeffs, 1e-7 / coeffs.eta);
    const double ratio = coherence_lengths(s.Kpar2, s.Kperp2).ratio;
    const double closed = short_time_ratio(v0, vB, 3);
    o.detail << "l_par/l_perp = " << ratio << " (closed form " << closed << "), target 8.7 +- 0.15";
    o.require(std::abs(ratio - 8.7) <= 0.15, "ratio");
    o.require(rel(ratio, closed) < 1e-4, "trajectory vs closed form");
  });

  criterion(2, "thermal coherence length", 1, [](Outcome& o) {
    const double m = 3727e6 * c::electron_volt / (c::speed_of_light * c::speed_of_light);
    const double lT = thermal_coherence_length(m, 300);
    o.detail << "l_T = " << lT * 1e12 << " pm, target 10 pm +- 5%";
    o.require(rel(lT, 1e-11) <= 0.05, "l_T");
  });

  criterion(3, "fig3 coherence-length curves", 5, [](Outcome& o) {
    const auto r = resolve(load_scenario(kDir + "/fig3.scn"));
    const auto& run = r.scenario.run;
    const auto times = log_time_grid(r.coeffs.eta, run.t_min, run.t_end, run.points);
    const auto traj = analytic_trajectory(r.particle.k0, r.particle.mass, r.coeffs, times);
    std::vector<double> lpar, lperp;
    for (const auto& s : traj) {
      const auto cl = coherence_lengths(s.Kpar2, s.Kperp2);
      lpar.push_back(cl.l_par / r.l_thermal);
      lperp.push_back(cl.l_perp / r.l_thermal);
    }
    auto slope = [&](const std::vector<double>& l) {
      return std::log(l[1] / l[0]) / std::log(times[1] / times[0]);
    };
    const double sp = slope(lpar), sq = slope(lperp);
    double min_par = 1e300, min_perp = 1e300;
    for (std::size_t i = 0; i < lpar.size(); ++i) {
      min_par = std::min(min_par, lpar[i]);
      min_perp = std::min(min_perp, lperp[i]);
    }
    const double end_par = lpar.back(), end_perp = lperp.back();
    const double trav = traj.back().traveled / stopping_range(r.v0, r.coeffs.zeta);
    o.detail << "slopes " << sp << ", " << sq << "; min l_perp/l_T " << min_perp
             << ", min l_par/l_T " << min_par << "; endpoints " << end_par << ", "
             << end_perp << "; traveled/(v0/zeta) " << trav;
    o.require(std::abs(sp + 0.5) <= 0.01 && std::abs(sq + 0.5) <= 0.01, "(a) slopes");
    o.require(min_perp < 1 && min_par >= 1, "(b) minima");
    o.require(rel(end_par, 1) <= 0.01 && rel(end_perp, 1) <= 0.01, "(c) endpoints");
    o.require(rel(trav, 1) <= 1e-3, "(d) traveled distance");
  });

  criterion(4, "SDE ensemble vs closed forms", 60, [](Outcome& o) {
    const auto r = resolve(load_scenario(kDir + "/fig3.scn"));
    const auto& cf = r.coeffs;
    SdeStepSpec spec;
    spec.coeffs = cf;
    spec.mass_S = r.particle.mass;
    spec.dt = r.scenario.run.dt / cf.zeta;
    std::vector<double> cps;
    for (double et : {0.01, 0.1, 1.0, 5.0}) cps.push_back(et / cf.eta);
    RandomStream rng(2718);
    const auto traj = run(r.particle.k0, spec, cps, 100000, rng);
    const Vec& k0 = r.particle.k0;
    double worst = 0;
    std::string worst_at;
    std::ostringstream exact_info;
    for (const auto& s : traj.points) {
      const auto a = analytic_state(k0, r.particle.mass, cf, s.t);
      const double et = s.t * cf.eta;
      auto z = [&](const char* what, double x, double ref, double se) {
        const double v = std::abs(x - ref) / se;
        if (v > worst) {
          worst = v;
          std::ostringstream w;
          w << what << " at eta t = " << et;
          worst_at = w.str();
        }
        o.require(v <= 5, std::string(what) + " z = " + std::to_string(v) +
                              " at eta t = " + std::to_string(et));
      };
      // every component of <k>; the transverse ones have zero mean
      for (int i = 0; i < r.d; ++i) z("<k>", s.mean_k(i), a.mean_k(i), s.mean_k_se(i));
      z("<k^2>", s.mean_k2, a.mean_k2, s.mean_k2_se);
      z("Kpar2", s.Kpar2, a.Kpar2, s.Kpar2_se);
      z("Kperp2", s.Kperp2, a.Kperp2, s.Kperp2_se);
      const auto e = variance_split_exact(k0.squaredNorm(), cf.eta, cf.gamma, cf.xi, r.d, s.t);
      exact_info << " " << et << ":" << (s.Kpar2 - e.Kpar2) / s.Kpar2_se << "/"
                 << (s.Kperp2 - e.Kperp2) / s.Kperp2_se;
    }
    o.detail << "max z = " << worst << " (" << worst_at << "), " << traj.steps
             << " steps; z vs full second-moment solution (Kpar2/Kperp2):"
             << exact_info.str();
  });

  criterion(5, "equilibrium distribution", 120, [](Outcome& o) {
    const auto r = resolve(load_scenario(kDir + "/isotropic_d3.scn"));
    SdeStepSpec spec;
    spec.coeffs = r.coeffs;
    spec.mass_S = r.particle.mass;
    spec.dt = r.scenario.run.dt / r.coeffs.zeta;
    Ensemble ens(r.particle.k0, r.scenario.run.n);
    RandomStream rng(r.scenario.run.seed);
    const double t_end = 10 / r.coeffs.eta;
    std::size_t steps = 0;
    while (ens.t < t_end) {
      const double keep = spec.dt;
      spec.dt = std::min(keep, t_end - ens.t);
      step(ens, spec, rng);
      spec.dt = keep;
      ++steps;
    }
    const auto rep = equilibrium_check(ens, r.particle.mass, r.bath.temperature);
    double worst_var = 0, worst_ks = 0;
    for (std::size_t a = 0; a < rep.variance_ratio.size(); ++a) {
      worst_var = std::max(worst_var, std::abs(rep.variance_ratio[a] - 1));
      worst_ks = std::max(worst_ks, rep.ks_distance[a]);
    }
    o.detail << "N = " << ens.size() << ", " << steps << " steps; max |var/expected - 1| = "
             << worst_var << ", max KS = " << worst_ks;
    o.require(worst_var <= 0.02, "variance");
    o.require(worst_ks < 0.01, "KS distance");
  });

  criterion(6, "cross-section identities", 5, [](Outcome& o) {
    double worst_id = 0, worst_tr = 0;
    int n = 0;
    for (int d : {2, 3, 4}) {
      std::vector<CrossSectionModel> models;
      models.emplace_back(SpaceDim(d), Isotropic{1e-19});
      for (double t0 : {0.05, 0.2, 0.8})
        models.emplace_back(SpaceDim(d), GaussianForward{1e-19, t0});
      models.push_back(CrossSectionModel::load_table(SpaceDim(d), kDir + "/tables/screened.csv"));
      for (const auto& m : models) {
        for (double k : {1e10, 3e10}) {
          const auto mo = m.moments(k);
          const double id = rel(0.5 * (mo.sigma_qpar + mo.sigma_qperp), mo.sigma_tr);
          const auto tr = transfer_integral_checks(m, k, m.quadrature(mo.order));
          worst_id = std::max(worst_id, id);
          worst_tr = std::max(worst_tr, tr.max_residual);
          ++n;
        }
      }
    }
    o.detail << n << " cases; max moment identity residual " << worst_id
             << ", max transfer residual " << worst_tr;
    o.require(worst_id <= 1e-10, "moment identity");
    o.require(worst_tr <= 1e-8, "transfer integrals");
  });

  criterion(7, "decoherence rate", 30, [](Outcome& o) {
    const auto r = resolve(load_scenario(kDir + "/frozen_bath.scn"));
    const auto& m = r.xs();
    const int d = r.d;
    const double k0 = r.particle.k0.norm();
    const auto F0 = decoherence_rate(m, r.particle, r.bath, Vec::Zero(d));
    o.require(F0.re == 0 && F0.im == 0, "F(0) = 0");
    RandomStream rng(99);
    double min_re = 1e300;
    for (int i = 0; i < 1000; ++i) {
      const double mag = std::pow(10.0, -3 + 6 * rng.uniform()) / k0;
      const Vec s = sample_isotropic(SpaceDim(d), rng) * mag;
      min_re = std::min(min_re, decoherence_rate(m, r.particle, r.bath, s).re);
    }
    o.require(min_re >= 0, "Re F >= 0");
    const double W = total_collision_rate(m, r.particle, r.bath, r.scheme);
    double acc = 0;
    int n = 0;
    for (double x = 500; x <= 1000; x += 12.5, ++n)
      acc += decoherence_rate(m, r.particle, r.bath, unit_direction(d, 0.3) * (x / k0)).re;
    const double sat = acc / n / W;
    o.require(rel(sat, 1) <= 0.02, "saturation");
    const Matrix a2 = km_diffusion(m, r.particle, r.bath, r.particle.k0, r.scheme);
    double worst_q = 0;
    for (double ang : {0.0, 0.6, M_PI / 2}) {
      const Vec s = unit_direction(d, ang) * (1e-3 / k0);
      const auto F = decoherence_rate(m, r.particle, r.bath, s);
      worst_q = std::max(worst_q, rel(F.re, 0.5 * s.dot(a2 * s)));
    }
    o.require(worst_q <= 0.02, "quadratic coefficient");
    o.detail << "F(0) = " << F0.re << "; min Re F over 1000 = " << min_re
             << "; window mean / W_tot = " << sat << "; quadratic rel err " << worst_q;
  });

  criterion(8, "transport identities", 1, [](Outcome& o) {
    double worst_z = 0, worst_fd = 0;
    for (int d : {2, 3, 4}) {
      BathSpec b;
      b.d = SpaceDim(d);
      b.mass = 4 * c::atomic_mass_unit;
      b.temperature = 300;
      b.density = 1e25;
      ParticleSpec p{40 * c::atomic_mass_unit, Vec::Zero(d)};
      p.k0(0) = 3e11;
      for (const auto& m : {CrossSectionModel(SpaceDim(d), Isotropic{1e-19}),
                            CrossSectionModel(SpaceDim(d), GaussianForward{1e-19, 0.3})}) {
        const auto cf = transport_coefficients(m, p, b, p.k0,
                                               d > 3 ? BathScheme::monte_carlo(20000, 1)
                                                     : BathScheme::quadrature(12));
        worst_z = std::max(worst_z, rel(cf.eta + (d - 1) * cf.gamma, cf.zeta));
        const double fd = p.mass * c::boltzmann * b.temperature / (c::hbar * c::hbar);
        worst_fd = std::max(worst_fd, rel(cf.xi / cf.eta, fd));
      }
    }
    o.detail << "max zeta relation residual " << worst_z << ", max xi/eta residual " << worst_fd;
    o.require(worst_z <= 1e-14, "zeta = eta + (d-1) gamma");
    o.require(worst_fd <= 1e-12, "xi/eta");
  });

  criterion(9, "operator identities", 60, [](Outcome& o) {
    int rows = 0, bad = 0;
    double min_ratio = 1e300;
    for (int d : {2, 3}) {
      for (const auto& row : run_opcheck(d, default_opcheck_config(d))) {
        ++rows;
        min_ratio = std::min(min_ratio, row.ratio);
        if (!row.pass) {
          ++bad;
          o.require(false, row.check + "/" + row.function + " d=" + std::to_string(d));
        }
      }
    }
    o.detail << rows << " checks, " << bad << " failed, min refinement ratio " << min_ratio;
  });

  criterion(10, "range calibration", 1, [](Outcome& o) {
    const auto r = resolve(load_scenario(kDir + "/alpha_air.scn"));
    const double t = 50 / r.coeffs.zeta;
    const auto s = analytic_state(r.particle.k0, r.particle.mass, r.coeffs, t);
    o.detail << "v0/c = " << r.v0 / c::speed_of_light << ", saturated distance "
             << s.traveled * 100 << " cm, target 3.5 cm +- 0.1%";
    o.require(rel(s.traveled, 0.035) <= 1e-3, "range");
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
