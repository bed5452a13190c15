#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastdeco/bath.hpp"
#include "fastdeco/xsection.hpp"

namespace fastdeco {

// Scenario file: `key = value` lines grouped under `[section]` headers, `#`
// starts a comment. Values are products/quotients of numbers and named
// constants (c, alpha, hbar, kB, pi, me, amu, eV, keV, MeV, e), optionally
// followed by a unit (kg, amu, me, MeV for masses; J, eV, keV, MeV for
// energies; m, cm, mm for lengths; rad, deg for angles).
struct Scenario {
  std::string source;    // file path or label
  std::string base_dir;  // for relative table paths
  int dimension = 3;

  struct Particle {
    double mass = 0;
    std::optional<double> energy;    // kinetic, J
    std::optional<double> k0;        // 1/m
    std::optional<double> velocity;  // m/s
  } particle;

  struct Bath {
    double mass = 0;
    std::optional<double> temperature;  // K
    std::optional<double> vrms;         // m/s, sqrt(<v_B^2>)
    double density = 0;
    bool frozen = false;
  } bath;

  struct CrossSection {
    std::string model;  // isotropic | gaussian_forward | tabulated
    double sigma0 = 0;
    double theta0 = 0;
    std::string table;
  } cross_section;

  struct Run {
    double t_end = 10;    // in units of 1/eta
    double t_min = 1e-4;  // in units of 1/eta
    double dt = 0.01;     // in units of 1/zeta
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    int points = 100;
    int sde_points = 20;
    std::string scheme = "analytic";   // analytic | full_a2
    std::string integrator = "exact";  // exact | euler
    std::string mode = "constant";     // constant | energy_updating
    double s_min = 1e-3;  // |s| k0
    double s_max = 1e2;
    int s_points = 25;
    int bath_order = 16;
  } run;

  std::optional<double> calibration_range;  // m

  struct Output {
    std::string prefix;
  } output;

  // every key as written, for the CSV preamble
  std::vector<std::pair<std::string, std::string>> entries;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(std::istream& in, const std::string& source,
                        const std::string& base_dir = ".");

// Evaluates a value expression without units (e.g. "7*alpha*c").
double evaluate_expression(const std::string& expr);

// Scenario with all derived physical quantities.
struct ResolvedScenario {
  Scenario scenario;
  int d = 3;
  ParticleSpec particle;
  BathSpec bath;
  std::optional<CrossSectionModel> model;
  TransportCoefficients coeffs;
  double calibration_factor = 1;  // coeffs.alpha_tr / model alpha_tr
  double v0 = 0;           // initial speed, m/s
  double energy = 0;       // kinetic energy, J
  double vB_rms = 0;       // sqrt(<v_B^2>), m/s
  double l_thermal = 0;    // m; infinity for a frozen bath
  double range = 0;        // v0 / zeta, m
  BathScheme scheme;
  std::vector<std::pair<std::string, std::string>> preamble;

  const CrossSectionModel& xs() const { return *model; }
};

ResolvedScenario resolve(const Scenario& s);

// Particle speed from kinetic energy; relativistic when E / mc^2 > 1e-3.
double speed_from_energy(double energy, double mass);

}  // namespace fastdeco
