#include "fastdeco/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fastdeco/constants.hpp"
#include "fastdeco/decoherence.hpp"
#include "fastdeco/errors.hpp"
#include "fastdeco/kinetics.hpp"
#include "fastdeco/opcheck.hpp"
#include "fastdeco/sde.hpp"

namespace fastdeco {

namespace {

using constants::hbar;

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> v;
  if (n == 1) return {hi};
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) v.push_back(std::exp(a + (b - a) * i / (n - 1)));
  v.front() = lo;
  v.back() = hi;
  return v;
}

double ratio_or_nan(double a, double b) {
  if (!std::isfinite(b)) return std::numeric_limits<double>::quiet_NaN();
  return a / b;
}

// |k| of the relative motion when the bath particle is at rest
double rest_relative_k(const ResolvedScenario& s) {
  KinematicPair kin{s.particle.mass, s.bath.mass};
  return kin.relative_k(s.particle.k0, Vec::Zero(s.d)).norm();
}

// typical relative wavenumber, sets the scale of s in decoherence sweeps
double reference_k(const ResolvedScenario& s) {
  KinematicPair kin{s.particle.mass, s.bath.mass};
  return kin.reduced_mass() * std::sqrt(s.v0 * s.v0 + s.vB_rms * s.vB_rms) /
         hbar;
}

TransportCoefficients calibrated(const ResolvedScenario& s,
                                 const TransportCoefficients& c) {
  if (!s.scenario.calibration_range) return c;
  return coefficients_from_alpha_tr(c.alpha_tr * s.calibration_factor,
                                    s.particle.mass, s.bath);
}

CommandResult start(const std::string& name, const ResolvedScenario& s) {
  CommandResult r;
  r.name = name;
  r.preamble.emplace_back("command", name);
  for (const auto& kv : s.preamble) r.preamble.push_back(kv);
  add_diagnostics(s, r);
  return r;
}

void add_row(Table& t, std::initializer_list<double> vals) {
  std::vector<std::string> row;
  for (double v : vals) row.push_back(format_number(v));
  t.rows.push_back(std::move(row));
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string CommandResult::csv() const {
  std::ostringstream os;
  for (const auto& [k, v] : preamble) os << "# " << k << " = " << v << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

std::string CommandResult::summary_text() const {
  std::ostringstream os;
  os << "[" << name << "]\n";
  for (const auto& [k, v] : summary) os << k << " = " << v << '\n';
  for (const auto& w : warnings) os << "warning: " << w << '\n';
  return os.str();
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names{
      "moments", "rates", "decoherence-rate", "evolve", "sde", "verify"};
  return names;
}

void add_diagnostics(const ResolvedScenario& s, CommandResult& out) {
  auto& sm = out.summary;
  const auto& model = s.xs();
  if (s.vB_rms > 0) {
    sm.emplace_back("coherence_ratio_short_time",
                    format_number(short_time_ratio(s.v0, s.vB_rms, s.d)));
  }
  sm.emplace_back("thermal_length_m", format_number(s.l_thermal));
  sm.emplace_back("range_m", format_number(s.range));
  sm.emplace_back("W_tot_per_s", format_number(total_collision_rate(
                                     model, s.particle, s.bath, s.scheme)));
  if (s.scenario.calibration_range)
    sm.emplace_back("calibration_factor", format_number(s.calibration_factor));

  const auto ws = weak_scattering(model, s.particle, s.bath);
  sm.emplace_back("k0_l_scat", format_number(ws.k_lscat));
  if (!ws.satisfied)
    out.warnings.push_back("weak-scattering condition k0 l_scat >> 1 violated (" +
                           format_number(ws.k_lscat) + ")");

  const auto m = model.moments(rest_relative_k(s));
  const double tr_ratio = m.sigma_total > 0 ? m.sigma_tr / m.sigma_total : 0;
  const double mass_ratio = s.particle.mass / s.bath.mass;
  sm.emplace_back("sigma_tr_over_sigma", format_number(tr_ratio));
  sm.emplace_back("mass_ratio", format_number(mass_ratio));
  if (!km_regime_ok(model, s.particle, s.bath)) {
    out.warnings.push_back(
        "Kramers-Moyal truncation needs sigma_tr/sigma << 1 or m_S/m_B >> 1 "
        "(sigma_tr/sigma = " +
        format_number(tr_ratio) + ", m_S/m_B = " + format_number(mass_ratio) +
        ")");
  }
}

CommandResult run_moments(const ResolvedScenario& s, const CommandOptions&) {
  CommandResult r = start("moments", s);
  const auto& model = s.xs();
  r.table.columns = {"k", "sigma", "sigma_tr", "sigma_qpar", "sigma_qperp",
                     "order"};
  const double k_ref = rest_relative_k(s);
  bool tr_equal = true;
  double worst_identity = 0;
  for (int j = 0; j <= 8; ++j) {
    const double k = k_ref * std::pow(10.0, (j - 4) / 4.0);
    const auto m = model.moments(k);
    add_row(r.table, {k, m.sigma_total, m.sigma_tr, m.sigma_qpar,
                      m.sigma_qperp, double(m.order)});
    tr_equal = tr_equal &&
               std::abs(m.sigma_tr - m.sigma_total) <= 1e-12 * m.sigma_total;
    if (m.sigma_tr > 0) {
      worst_identity =
          std::max(worst_identity,
                   std::abs(0.5 * (m.sigma_qpar + m.sigma_qperp) - m.sigma_tr) /
                       m.sigma_tr);
    }
  }
  if (tr_equal) r.summary.emplace_back("sigma_tr", "sigma");
  r.summary.emplace_back("max_rel_residual_qpar_qperp_vs_tr",
                         format_number(worst_identity));
  return r;
}

CommandResult run_rates(const ResolvedScenario& s, const CommandOptions&) {
  CommandResult r = start("rates", s);
  r.table.columns = {"k_norm", "alpha_total", "alpha_tr", "alpha_qpar",
                     "alpha_qperp", "eta", "zeta", "gamma", "xi"};
  const double k0 = s.particle.k0.norm();
  const int n = 25;
  for (int i = 1; i <= n; ++i) {
    const double k = k0 * i / n;
    Vec kS = Vec::Zero(s.d);
    kS(0) = k;
    const Rates a = collisional_rates(s.xs(), s.particle, s.bath, kS, s.scheme);
    const double f = s.scenario.calibration_range ? s.calibration_factor : 1;
    const auto c =
        coefficients_from_alpha_tr(a.tr * f, s.particle.mass, s.bath);
    add_row(r.table, {k, a.total * f, a.tr * f, a.qpar * f, a.qperp * f, c.eta,
                      c.zeta, c.gamma, c.xi});
  }
  const auto& c = s.coeffs;
  r.summary.emplace_back("eta_per_s", format_number(c.eta));
  r.summary.emplace_back("zeta_per_s", format_number(c.zeta));
  r.summary.emplace_back("gamma_per_s", format_number(c.gamma));
  r.summary.emplace_back("xi_per_m2_s", format_number(c.xi));
  return r;
}

CommandResult run_decoherence(const ResolvedScenario& s,
                              const CommandOptions&) {
  CommandResult r = start("decoherence-rate", s);
  r.table.columns = {"s_norm", "direction_id", "reF", "imF", "Wtot"};
  const double k_ref = reference_k(s);
  r.preamble.emplace_back("s_norm_unit_per_m", format_number(k_ref));
  r.preamble.emplace_back("direction_0", "along k0");
  r.preamble.emplace_back("direction_1", "perpendicular to k0");
  r.preamble.emplace_back("direction_2", "diagonal");

  const int d = s.d;
  std::vector<Vec> dirs(3, Vec::Zero(d));
  dirs[0](0) = 1;
  dirs[1](1) = 1;
  dirs[2](0) = dirs[2](1) = std::sqrt(0.5);

  DecoherenceOptions opt;
  opt.scheme = s.scheme;
  const double W = total_collision_rate(s.xs(), s.particle, s.bath, s.scheme);
  const auto& run = s.scenario.run;
  double worst_sat = 0;
  for (double sn : log_grid(run.s_min, run.s_max, run.s_points)) {
    for (int id = 0; id < 3; ++id) {
      const Vec sv = dirs[id] * (sn / k_ref);
      const auto F = decoherence_rate(s.xs(), s.particle, s.bath, sv, opt);
      add_row(r.table, {sn, double(id), F.re, F.im, W});
      if (sn == run.s_max) worst_sat = std::max(worst_sat, std::abs(F.re / W - 1));
    }
  }
  r.summary.emplace_back("reF_over_Wtot_at_s_max_deviation",
                         format_number(worst_sat));
  return r;
}

CommandResult run_evolve(const ResolvedScenario& s, const CommandOptions&) {
  CommandResult r = start("evolve", s);
  r.table.columns = {"eta_t",         "Kpar2",         "Kperp2",
                     "lpar_over_lT",  "lperp_over_lT", "traveled_over_range"};
  const auto& run = s.scenario.run;
  const auto& c = s.coeffs;
  if (!(c.eta > 0)) throw DomainError("evolve needs a positive eta (thermal bath)");
  const auto times = log_time_grid(c.eta, run.t_min, run.t_end, run.points);

  std::vector<MomentState> states;
  if (run.mode == "energy_updating") {
    const CrossSectionModel& model = s.xs();
    CoefficientProvider provider = [&](const Vec& k) {
      return calibrated(s, transport_coefficients(model, s.particle, s.bath, k,
                                                  s.scheme));
    };
    states = energy_updating_trajectory(s.particle.k0, s.particle.mass,
                                        provider, times);
  } else {
    states = analytic_trajectory(s.particle.k0, s.particle.mass, c, times);
  }

  double min_par = INFINITY, min_perp = INFINITY;
  for (const auto& st : states) {
    const auto cl = coherence_lengths(st.Kpar2, st.Kperp2, s.l_thermal);
    const double lp = ratio_or_nan(cl.l_par, s.l_thermal);
    const double lq = ratio_or_nan(cl.l_perp, s.l_thermal);
    min_par = std::min(min_par, lp);
    min_perp = std::min(min_perp, lq);
    add_row(r.table, {c.eta * st.t, st.Kpar2, st.Kperp2, lp, lq,
                      st.traveled / s.range});
  }
  const auto& last = r.table.rows.back();
  r.summary.emplace_back("min_lpar_over_lT", format_number(min_par));
  r.summary.emplace_back("min_lperp_over_lT", format_number(min_perp));
  r.summary.emplace_back("final_lpar_over_lT", last[3]);
  r.summary.emplace_back("final_lperp_over_lT", last[4]);
  r.summary.emplace_back("final_traveled_over_range", last[5]);
  return r;
}

CommandResult run_sde(const ResolvedScenario& s, const CommandOptions& opt) {
  CommandResult r = start("sde", s);
  const auto& run = s.scenario.run;
  const auto& c = s.coeffs;
  const std::size_t n = opt.n.value_or(run.n);
  const double dt_units = opt.dt.value_or(run.dt);
  const double t_end = opt.t_end.value_or(run.t_end);
  const std::uint64_t seed = opt.seed.value_or(run.seed);
  const std::string scheme = opt.scheme.value_or(run.scheme);
  if (scheme != "analytic" && scheme != "full_a2")
    throw DomainError("unknown sde scheme '" + scheme + "'");
  if (!(c.eta > 0) || !(c.zeta > 0))
    throw DomainError("sde needs positive friction coefficients");
  if (!(t_end > run.t_min)) throw DomainError("t_end must exceed t_min");

  r.preamble.emplace_back("sde.n", std::to_string(n));
  r.preamble.emplace_back("sde.dt_zeta", format_number(dt_units));
  r.preamble.emplace_back("sde.t_end_eta", format_number(t_end));
  r.preamble.emplace_back("sde.seed", std::to_string(seed));
  r.preamble.emplace_back("sde.scheme", scheme);
  r.preamble.emplace_back("sde.integrator", run.integrator);

  std::vector<double> cps;
  for (double x : log_grid(run.t_min, t_end, run.sde_points))
    cps.push_back(x / c.eta);
  const double dt = dt_units / c.zeta;
  RandomStream rng(seed);

  Trajectory traj;
  if (scheme == "analytic") {
    SdeStepSpec spec;
    spec.dt = dt;
    spec.coeffs = c;
    spec.mass_S = s.particle.mass;
    spec.integrator = run.integrator == "euler" ? Integrator::EulerMaruyama
                                                : Integrator::ExactOU;
    traj = fastdeco::run(s.particle.k0, spec, cps, n, rng, opt.threads);
  } else {
    if (s.scenario.calibration_range)
      r.warnings.push_back(
          "full_a2 uses the scattering-model rates; the range calibration is "
          "not applied");
    const double k0 = s.particle.k0.norm();
    const double k_max =
        1.5 * k0 + 8 * std::sqrt(s.d * s.bath.thermal_k2() * s.particle.mass /
                                 s.bath.mass);
    RateTable table(s.xs(), s.particle, s.bath, k_max, 64, s.scheme);
    KinematicPair kin{s.particle.mass, s.bath.mass};
    FullA2Options fo;
    fo.threads = opt.threads;
    traj = run_full_a2(s.particle.k0, table, kin, s.bath, dt, cps, n, rng, fo,
                       km_regime_ok(s.xs(), s.particle, s.bath));
    if (traj.km_warning)
      r.warnings.push_back("full_a2 run outside the Kramers-Moyal regime");
  }

  r.table.columns = {"eta_t",
                     "Kpar2",
                     "Kperp2",
                     "lpar_over_lT",
                     "lperp_over_lT",
                     "traveled_over_range",
                     "stderr_Kpar2",
                     "stderr_Kperp2",
                     "stderr_lpar_over_lT",
                     "stderr_lperp_over_lT",
                     "stderr_traveled_over_range"};
  double max_z = 0;
  for (const auto& p : traj.points) {
    const auto cl = coherence_lengths(p.Kpar2, p.Kperp2, s.l_thermal);
    const double lp = ratio_or_nan(cl.l_par, s.l_thermal);
    const double lq = ratio_or_nan(cl.l_perp, s.l_thermal);
    // delta method: l ~ K^-1/2
    const double lp_se = p.Kpar2 > 0 ? 0.5 * lp * p.Kpar2_se / p.Kpar2 : NAN;
    const double lq_se = p.Kperp2 > 0 ? 0.5 * lq * p.Kperp2_se / p.Kperp2 : NAN;
    add_row(r.table, {c.eta * p.t, p.Kpar2, p.Kperp2, lp, lq,
                      p.traveled / s.range, p.Kpar2_se, p.Kperp2_se, lp_se,
                      lq_se, p.traveled_se / s.range});
    if (scheme == "analytic") {
      const auto ref = analytic_state(s.particle.k0, s.particle.mass, c, p.t);
      const double z1 = p.mean_k2_se > 0
                            ? std::abs(p.mean_k2 - ref.mean_k2) / p.mean_k2_se
                            : 0;
      const double z2 = p.Kperp2_se > 0
                            ? std::abs(p.Kperp2 - ref.Kperp2) / p.Kperp2_se
                            : 0;
      max_z = std::max({max_z, z1, z2});
    }
  }
  r.summary.emplace_back("steps", std::to_string(traj.steps));
  if (scheme == "analytic")
    r.summary.emplace_back("max_z_mean_k2_Kperp2_vs_closed_form",
                           format_number(max_z));
  return r;
}

namespace {

// screened-Coulomb shape sampled on a (k, theta) grid
Tabulated screened_table() {
  Tabulated t;
  const double a = 5e-11;
  t.k = {1e9, 1e10, 1e11};
  for (int i = 0; i <= 120; ++i) t.theta.push_back(M_PI * i / 120);
  for (double k : t.k) {
    for (double th : t.theta) {
      const double q = 2 * k * a * std::sin(0.5 * th);
      t.values.push_back(1e-20 / ((1 + q * q) * (1 + q * q)));
    }
  }
  return t;
}

}  // namespace

CommandResult run_verify(const ResolvedScenario* s, const CommandOptions&) {
  CommandResult r;
  r.name = "verify";
  r.preamble.emplace_back("command", "verify");
  if (s) {
    for (const auto& kv : s->preamble) r.preamble.push_back(kv);
    add_diagnostics(*s, r);
  }
  r.table.columns = {"check", "function", "d",    "h",         "coarse",
                     "fine",  "ratio",    "order", "tolerance", "pass"};
  int failures = 0;
  auto push = [&](std::vector<std::string> row, bool pass) {
    row.push_back(pass ? "1" : "0");
    r.table.rows.push_back(std::move(row));
    if (!pass) ++failures;
  };

  for (int d : {2, 3}) {
    const auto cfg = default_opcheck_config(d);
    for (const auto& row : run_opcheck(d, cfg)) {
      const bool eig = row.check.rfind("eigenvalue", 0) == 0;
      push({row.check, row.function, std::to_string(d), format_number(row.h),
            format_number(row.coarse), format_number(row.fine),
            format_number(row.ratio),
            eig ? "" : format_number(std::log2(row.ratio)),
            format_number(eig ? cfg.eigen_rtol : cfg.min_ratio)},
           row.pass);
    }
  }

  // cross-section identities
  for (int d : {2, 3, 4}) {
    std::vector<std::pair<std::string, CrossSectionModel>> models;
    models.emplace_back("isotropic", CrossSectionModel(SpaceDim(d), Isotropic{1.0}));
    for (double t0 : {0.05, 0.2, 0.8}) {
      models.emplace_back("gaussian_forward_" + format_number(t0),
                          CrossSectionModel(SpaceDim(d), GaussianForward{1.0, t0}));
    }
    models.emplace_back("tabulated_screened",
                        CrossSectionModel(SpaceDim(d), screened_table()));
    if (s && s->d == d) models.emplace_back("scenario", s->xs());
    for (const auto& [name, model] : models) {
      const double k = 1e10;
      const auto m = model.moments(k);
      const double id =
          std::abs(0.5 * (m.sigma_qpar + m.sigma_qperp) - m.sigma_tr) / m.sigma_tr;
      push({"moment_identity", name, std::to_string(d), "", format_number(id),
            "", "", "", "1e-10"},
           id <= 1e-10);
      const auto tr = transfer_integral_checks(model, k, model.quadrature(m.order));
      push({"transfer_integrals", name, std::to_string(d), "",
            format_number(tr.max_residual), "", "", "", "1e-08"},
           tr.max_residual <= 1e-8);
    }
  }

  if (s) {
    const auto& c = s->coeffs;
    const double zr = std::abs(c.zeta - (c.eta + (c.d - 1) * c.gamma)) / c.zeta;
    push({"zeta_relation", "scenario", std::to_string(s->d), "",
          format_number(zr), "", "", "", "1e-14"},
         zr <= 1e-14);
    if (s->bath.temperature > 0) {
      const double expect = s->particle.mass * constants::boltzmann *
                            s->bath.temperature / (hbar * hbar);
      const double fd = std::abs(c.xi / c.eta - expect) / expect;
      push({"fluctuation_dissipation", "scenario", std::to_string(s->d), "",
            format_number(fd), "", "", "", "1e-12"},
           fd <= 1e-12);
    }
  }

  r.summary.emplace_back("checks", std::to_string(r.table.rows.size()));
  r.summary.emplace_back("failures", std::to_string(failures));
  if (failures) {
    r.warnings.push_back(std::to_string(failures) + " verification check(s) failed");
    r.exit_code = 3;
  }
  return r;
}

CommandResult run_subcommand(const std::string& name,
                             const ResolvedScenario* scenario,
                             const CommandOptions& opt) {
  if (name == "verify") return run_verify(scenario, opt);
  if (!scenario) throw DomainError("subcommand '" + name + "' needs a scenario");
  const auto& s = *scenario;
  if (name == "moments") return run_moments(s, opt);
  if (name == "rates") return run_rates(s, opt);
  if (name == "decoherence-rate") return run_decoherence(s, opt);
  if (name == "evolve") return run_evolve(s, opt);
  if (name == "sde") return run_sde(s, opt);
  throw DomainError("unknown subcommand '" + name + "'");
}

}  // namespace fastdeco
