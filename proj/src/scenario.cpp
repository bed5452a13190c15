#include "fastdeco/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "fastdeco/constants.hpp"
#include "fastdeco/errors.hpp"
#include "fastdeco/kinetics.hpp"

namespace fastdeco {

namespace c = constants;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, double>& named_constants() {
  static const std::map<std::string, double> m{
      {"c", c::speed_of_light},
      {"alpha", c::fine_structure},
      {"hbar", c::hbar},
      {"kB", c::boltzmann},
      {"pi", c::pi},
      {"me", c::electron_mass},
      {"amu", c::atomic_mass_unit},
      {"e", c::elementary_charge},
      {"eV", c::electron_volt},
      {"keV", 1e3 * c::electron_volt},
      {"MeV", c::mega_electron_volt},
  };
  return m;
}

double parse_factor(const std::string& tok) {
  const std::string t = trim(tok);
  if (t.empty()) throw std::invalid_argument("empty factor");
  auto it = named_constants().find(t);
  if (it != named_constants().end()) return it->second;
  std::size_t pos = 0;
  double v = std::stod(t, &pos);
  if (pos != t.size()) throw std::invalid_argument("bad number '" + t + "'");
  return v;
}

enum class Kind {
  Int, Real, Bool, Text, Mass, Energy, Speed, Wavenumber, Temperature,
  Length, Angle
};

double unit_factor(Kind kind, const std::string& unit) {
  if (unit.empty()) return 1;
  switch (kind) {
    case Kind::Mass:
      if (unit == "kg") return 1;
      if (unit == "amu") return c::atomic_mass_unit;
      if (unit == "me") return c::electron_mass;
      if (unit == "MeV") return c::mass_from_mev(1);
      break;
    case Kind::Energy:
      if (unit == "J") return 1;
      if (unit == "eV") return c::electron_volt;
      if (unit == "keV") return 1e3 * c::electron_volt;
      if (unit == "MeV") return c::mega_electron_volt;
      break;
    case Kind::Length:
      if (unit == "m") return 1;
      if (unit == "cm") return 1e-2;
      if (unit == "mm") return 1e-3;
      break;
    case Kind::Angle:
      if (unit == "rad") return 1;
      if (unit == "deg") return c::pi / 180;
      break;
    case Kind::Temperature:
      if (unit == "K") return 1;
      break;
    case Kind::Speed:
      if (unit == "m/s") return 1;
      break;
    case Kind::Wavenumber:
      if (unit == "1/m") return 1;
      break;
    default:
      break;
  }
  throw std::invalid_argument("unknown unit '" + unit + "'");
}

struct KeyInfo {
  Kind kind;
};

const std::map<std::string, KeyInfo>& key_table() {
  static const std::map<std::string, KeyInfo> t{
      {"dimension", {Kind::Int}},
      {"particle.mass", {Kind::Mass}},
      {"particle.energy", {Kind::Energy}},
      {"particle.k0", {Kind::Wavenumber}},
      {"particle.velocity", {Kind::Speed}},
      {"bath.mass", {Kind::Mass}},
      {"bath.temperature", {Kind::Temperature}},
      {"bath.vrms", {Kind::Speed}},
      {"bath.density", {Kind::Real}},
      {"bath.frozen", {Kind::Bool}},
      {"cross_section.model", {Kind::Text}},
      {"cross_section.sigma0", {Kind::Real}},
      {"cross_section.theta0", {Kind::Angle}},
      {"cross_section.table", {Kind::Text}},
      {"run.t_end", {Kind::Real}},
      {"run.t_min", {Kind::Real}},
      {"run.dt", {Kind::Real}},
      {"run.n", {Kind::Int}},
      {"run.seed", {Kind::Int}},
      {"run.points", {Kind::Int}},
      {"run.sde_points", {Kind::Int}},
      {"run.scheme", {Kind::Text}},
      {"run.integrator", {Kind::Text}},
      {"run.mode", {Kind::Text}},
      {"run.s_min", {Kind::Real}},
      {"run.s_max", {Kind::Real}},
      {"run.s_points", {Kind::Int}},
      {"run.bath_order", {Kind::Int}},
      {"calibration.range", {Kind::Length}},
      {"output.prefix", {Kind::Text}},
  };
  return t;
}

struct Entry {
  std::string raw;
  std::size_t line;
};

}  // namespace

namespace {

double evaluate_product(const std::string& expr) {
  const std::string e = trim(expr);
  if (e.empty()) throw std::invalid_argument("empty expression");
  double value = 1;
  char op = '*';
  std::size_t start = 0;
  for (std::size_t i = 0; i <= e.size(); ++i) {
    const bool end = i == e.size();
    // a sign after an exponent marker belongs to the number
    const bool is_op = !end && (e[i] == '*' || e[i] == '/');
    if (end || is_op) {
      const double f = parse_factor(e.substr(start, i - start));
      value = op == '*' ? value * f : value / f;
      if (!end) op = e[i];
      start = i + 1;
    }
  }
  return value;
}

}  // namespace

double evaluate_expression(const std::string& expr) {
  try {
    return evaluate_product(expr);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError("bad expression '" + expr + "': " + e.what(), 0);
  }
}

Scenario parse_scenario(std::istream& in, const std::string& source,
                        const std::string& base_dir) {
  Scenario s;
  s.source = source;
  s.base_dir = base_dir;
  std::map<std::string, Entry> entries;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("malformed section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"particle", "bath", "cross_section", "run",
                                    "calibration", "output"};
      bool ok = false;
      for (auto* k : known) ok = ok || section == k;
      if (!ok) throw ParseError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key = value", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!key_table().count(full))
      throw ParseError("unknown key '" + full + "'", lineno);
    if (entries.count(full))
      throw ParseError("duplicate key '" + full + "'", lineno);
    entries[full] = {trim(line.substr(eq + 1)), lineno};
    s.entries.emplace_back(full, trim(line.substr(eq + 1)));
  }

  auto has = [&](const std::string& k) { return entries.count(k) > 0; };
  auto fail = [&](const std::string& k, const std::string& why) -> ParseError {
    auto it = entries.find(k);
    return ParseError("key '" + k + "': " + why,
                      it == entries.end() ? 0 : it->second.line);
  };
  auto number = [&](const std::string& k) {
    const Kind kind = key_table().at(k).kind;
    const std::string raw = entries.at(k).raw;
    try {
      std::istringstream ss(raw);
      std::string expr, unit, extra;
      ss >> expr >> unit >> extra;
      if (!extra.empty()) throw std::invalid_argument("trailing text");
      return evaluate_expression(expr) * unit_factor(kind, unit);
    } catch (const std::exception& ex) {
      throw fail(k, std::string("cannot parse '") + raw + "' (" + ex.what() + ")");
    }
  };
  auto positive = [&](const std::string& k) {
    const double v = number(k);
    if (!(v > 0) || !std::isfinite(v)) throw fail(k, "must be positive");
    return v;
  };
  auto integer = [&](const std::string& k, long lo) {
    const double v = number(k);
    if (v != std::floor(v) || v < lo)
      throw fail(k, "must be an integer >= " + std::to_string(lo));
    return static_cast<long long>(v);
  };
  auto text = [&](const std::string& k) { return entries.at(k).raw; };
  auto require = [&](const std::string& k) {
    if (!has(k)) throw ParseError("missing required key '" + k + "'", 0);
  };

  require("dimension");
  s.dimension = static_cast<int>(integer("dimension", 2));

  require("particle.mass");
  s.particle.mass = positive("particle.mass");
  int given = 0;
  for (const char* k : {"particle.energy", "particle.k0", "particle.velocity"})
    given += has(k);
  if (given != 1)
    throw ParseError(
        "exactly one of particle.energy, particle.k0, particle.velocity is "
        "required",
        0);
  if (has("particle.energy")) s.particle.energy = positive("particle.energy");
  if (has("particle.k0")) s.particle.k0 = positive("particle.k0");
  if (has("particle.velocity")) {
    s.particle.velocity = positive("particle.velocity");
    if (*s.particle.velocity >= c::speed_of_light)
      throw fail("particle.velocity", "must be below the speed of light");
  }

  require("bath.mass");
  s.bath.mass = positive("bath.mass");
  require("bath.density");
  s.bath.density = positive("bath.density");
  if (has("bath.frozen")) {
    const std::string v = text("bath.frozen");
    if (v == "true" || v == "1" || v == "yes") s.bath.frozen = true;
    else if (v == "false" || v == "0" || v == "no") s.bath.frozen = false;
    else throw fail("bath.frozen", "expected true or false");
  }
  if (has("bath.temperature") && has("bath.vrms"))
    throw fail("bath.vrms", "give either bath.temperature or bath.vrms");
  if (has("bath.temperature")) s.bath.temperature = positive("bath.temperature");
  if (has("bath.vrms")) s.bath.vrms = positive("bath.vrms");
  if (!s.bath.frozen && !s.bath.temperature && !s.bath.vrms)
    throw ParseError("missing required key 'bath.temperature' (or bath.vrms)", 0);

  require("cross_section.model");
  s.cross_section.model = text("cross_section.model");
  const auto& m = s.cross_section.model;
  if (m != "isotropic" && m != "gaussian_forward" && m != "tabulated")
    throw fail("cross_section.model",
               "expected isotropic, gaussian_forward or tabulated");
  if (m != "tabulated") {
    require("cross_section.sigma0");
    s.cross_section.sigma0 = positive("cross_section.sigma0");
  }
  if (m == "gaussian_forward") {
    require("cross_section.theta0");
    s.cross_section.theta0 = positive("cross_section.theta0");
  }
  if (m == "tabulated") {
    require("cross_section.table");
    s.cross_section.table = text("cross_section.table");
  }

  if (has("run.t_end")) s.run.t_end = positive("run.t_end");
  if (has("run.t_min")) s.run.t_min = positive("run.t_min");
  if (has("run.dt")) s.run.dt = positive("run.dt");
  if (has("run.n")) s.run.n = static_cast<std::size_t>(integer("run.n", 2));
  if (has("run.seed")) s.run.seed = static_cast<std::uint64_t>(integer("run.seed", 0));
  if (has("run.points")) s.run.points = static_cast<int>(integer("run.points", 2));
  if (has("run.sde_points"))
    s.run.sde_points = static_cast<int>(integer("run.sde_points", 1));
  if (has("run.scheme")) {
    s.run.scheme = text("run.scheme");
    if (s.run.scheme != "analytic" && s.run.scheme != "full_a2")
      throw fail("run.scheme", "expected analytic or full_a2");
  }
  if (has("run.integrator")) {
    s.run.integrator = text("run.integrator");
    if (s.run.integrator != "exact" && s.run.integrator != "euler")
      throw fail("run.integrator", "expected exact or euler");
  }
  if (has("run.mode")) {
    s.run.mode = text("run.mode");
    if (s.run.mode != "constant" && s.run.mode != "energy_updating")
      throw fail("run.mode", "expected constant or energy_updating");
  }
  if (has("run.s_min")) s.run.s_min = positive("run.s_min");
  if (has("run.s_max")) s.run.s_max = positive("run.s_max");
  if (has("run.s_points")) s.run.s_points = static_cast<int>(integer("run.s_points", 1));
  if (has("run.bath_order"))
    s.run.bath_order = static_cast<int>(integer("run.bath_order", 1));
  if (s.run.t_min >= s.run.t_end) throw fail("run.t_min", "must be below run.t_end");
  if (s.run.s_min > s.run.s_max) throw fail("run.s_min", "must not exceed run.s_max");

  if (has("calibration.range")) s.calibration_range = positive("calibration.range");
  if (has("output.prefix")) s.output.prefix = text("output.prefix");
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path, 0);
  namespace fs = std::filesystem;
  const fs::path p(path);
  Scenario s = parse_scenario(in, path, p.has_parent_path() ? p.parent_path().string() : ".");
  if (s.output.prefix.empty()) s.output.prefix = p.stem().string();
  return s;
}

double speed_from_energy(double energy, double mass) {
  if (!(energy > 0) || !(mass > 0))
    throw DomainError("speed_from_energy needs positive energy and mass");
  const double rest = mass * c::speed_of_light * c::speed_of_light;
  const double x = energy / rest;
  if (x > 1e-3) {
    const double g = 1 + x;
    return c::speed_of_light * std::sqrt(1 - 1 / (g * g));
  }
  return std::sqrt(2 * energy / mass);
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

ResolvedScenario resolve(const Scenario& s) {
  ResolvedScenario r;
  r.scenario = s;
  r.d = s.dimension;
  const SpaceDim d(s.dimension);
  const double mS = s.particle.mass;

  if (s.particle.energy) {
    r.energy = *s.particle.energy;
    r.v0 = speed_from_energy(r.energy, mS);
  } else if (s.particle.k0) {
    r.v0 = c::hbar * *s.particle.k0 / mS;
    r.energy = 0.5 * mS * r.v0 * r.v0;
  } else {
    r.v0 = *s.particle.velocity;
    r.energy = 0.5 * mS * r.v0 * r.v0;
  }
  const double k0 = s.particle.k0 ? *s.particle.k0 : mS * r.v0 / c::hbar;
  r.particle.mass = mS;
  r.particle.k0 = Vec::Zero(r.d);
  r.particle.k0(0) = k0;

  r.bath.d = d;
  r.bath.mass = s.bath.mass;
  r.bath.density = s.bath.density;
  r.bath.distribution = s.bath.frozen ? BathDistribution::Frozen
                                      : BathDistribution::MaxwellBoltzmann;
  if (s.bath.vrms) {
    r.vB_rms = *s.bath.vrms;
    r.bath.temperature = s.bath.mass * r.vB_rms * r.vB_rms / (r.d * c::boltzmann);
  } else if (s.bath.temperature) {
    r.bath.temperature = *s.bath.temperature;
    r.vB_rms = std::sqrt(r.d * c::boltzmann * r.bath.temperature / s.bath.mass);
  }
  if (s.bath.frozen) {
    r.bath.temperature = 0;
    r.vB_rms = 0;
  }

  const auto& cs = s.cross_section;
  if (cs.model == "isotropic") {
    r.model.emplace(d, Isotropic{cs.sigma0});
  } else if (cs.model == "gaussian_forward") {
    r.model.emplace(d, GaussianForward{cs.sigma0, cs.theta0});
  } else {
    namespace fs = std::filesystem;
    fs::path tp(cs.table);
    if (tp.is_relative()) tp = fs::path(s.base_dir) / tp;
    r.model.emplace(CrossSectionModel::load_table(d, tp.string()));
  }

  r.scheme = BathScheme::quadrature(s.run.bath_order);
  if (r.d > 3) r.scheme = BathScheme::monte_carlo(20000, s.run.seed);
  const auto model_coeffs =
      transport_coefficients(*r.model, r.particle, r.bath, r.particle.k0, r.scheme);
  if (s.calibration_range) {
    const double M = mS + s.bath.mass;
    const double zeta = r.v0 / *s.calibration_range;
    const double alpha_tr = zeta * M / s.bath.mass;
    r.coeffs = coefficients_from_alpha_tr(alpha_tr, mS, r.bath);
    r.calibration_factor =
        model_coeffs.alpha_tr > 0 ? alpha_tr / model_coeffs.alpha_tr : 0;
  } else {
    r.coeffs = model_coeffs;
  }
  r.range = stopping_range(r.v0, r.coeffs.zeta);
  r.l_thermal = r.bath.temperature > 0
                    ? thermal_coherence_length(mS, r.bath.temperature)
                    : std::numeric_limits<double>::infinity();

  auto& p = r.preamble;
  p.emplace_back("scenario", s.source);
  for (const auto& [k, v] : s.entries) p.emplace_back("input." + k, v);
  p.emplace_back("dimension", std::to_string(r.d));
  p.emplace_back("particle_mass_kg", fmt(mS));
  p.emplace_back("bath_mass_kg", fmt(s.bath.mass));
  p.emplace_back("mass_ratio", fmt(mS / s.bath.mass));
  p.emplace_back("reduced_mass_kg", fmt(mS * s.bath.mass / (mS + s.bath.mass)));
  p.emplace_back("total_mass_kg", fmt(mS + s.bath.mass));
  p.emplace_back("kinetic_energy_J", fmt(r.energy));
  p.emplace_back("v0_m_per_s", fmt(r.v0));
  p.emplace_back("v0_over_c", fmt(r.v0 / c::speed_of_light));
  p.emplace_back("k0_per_m", fmt(k0));
  p.emplace_back("bath_temperature_K", fmt(r.bath.temperature));
  p.emplace_back("bath_vrms_m_per_s", fmt(r.vB_rms));
  p.emplace_back("velocity_ratio", r.vB_rms > 0 ? fmt(r.v0 / r.vB_rms) : "inf");
  p.emplace_back("k_T_per_m", fmt(std::sqrt(r.bath.thermal_k2())));
  p.emplace_back("bath_density", fmt(s.bath.density));
  p.emplace_back("cross_section", r.model->describe());
  p.emplace_back("calibrated_range_m",
                 s.calibration_range ? fmt(*s.calibration_range) : "none");
  p.emplace_back("alpha_tr_per_s", fmt(r.coeffs.alpha_tr));
  p.emplace_back("eta_per_s", fmt(r.coeffs.eta));
  p.emplace_back("zeta_per_s", fmt(r.coeffs.zeta));
  p.emplace_back("gamma_per_s", fmt(r.coeffs.gamma));
  p.emplace_back("xi_per_m2_s", fmt(r.coeffs.xi));
  p.emplace_back("thermal_length_m", fmt(r.l_thermal));
  p.emplace_back("range_m", fmt(r.range));
  p.emplace_back("seed", std::to_string(s.run.seed));
  return r;
}

}  // namespace fastdeco
