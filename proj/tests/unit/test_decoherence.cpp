#include <doctest.h>

#include <cmath>
#include <complex>

#include "fastdeco/bath.hpp"
#include "fastdeco/constants.hpp"
#include "fastdeco/decoherence.hpp"
#include "fastdeco/errors.hpp"
#include "oracles.hpp"

using namespace fastdeco;
namespace c = fastdeco::constants;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Setup {
  ParticleSpec p;
  BathSpec b;
};

Setup frozen_setup(int d) {
  Setup s;
  s.p.mass = 4 * c::atomic_mass_unit;
  s.p.k0 = Vec::Zero(d);
  s.p.k0(0) = 2e10;
  s.b.d = SpaceDim(d);
  s.b.mass = 4 * c::atomic_mass_unit;
  s.b.density = 2.5e25;
  s.b.distribution = BathDistribution::Frozen;
  return s;
}

Setup thermal_setup(int d) {
  Setup s = frozen_setup(d);
  s.b.mass = 2 * c::atomic_mass_unit;
  s.b.temperature = 300;
  s.b.distribution = BathDistribution::MaxwellBoltzmann;
  return s;
}

Vec direction(int d, double a) {
  Vec v = Vec::Zero(d);
  v(0) = std::cos(a);
  v(1) = std::sin(a);
  return v;
}

}  // namespace

TEST_SUITE("decoherence") {

TEST_CASE("transverse averages") {
  for (double a : {0.0, 0.3, 2.0, 17.5}) {
    CHECK(transverse_average(2, a) == doctest::Approx(std::cos(a)).epsilon(1e-14));
    CHECK(transverse_average(3, a) == doctest::Approx(std::cyl_bessel_j(0.0, a)).epsilon(1e-12));
    CHECK(transverse_average(4, a) ==
          doctest::Approx(a == 0 ? 1.0 : std::sin(a) / a).epsilon(1e-14));
    // d = 5, 6 against a direct average over the transverse sphere
    for (int d : {5, 6}) {
      const double num = oracle::simpson(
          [&](double p) { return std::cos(a * std::cos(p)) * std::pow(std::sin(p), d - 3); },
          0, M_PI);
      const double den =
          oracle::simpson([&](double p) { return std::pow(std::sin(p), d - 3); }, 0, M_PI);
      CHECK(std::abs(transverse_average(d, a) - num / den) < 1e-10);
    }
  }
  // small arguments keep relative accuracy in 1 - average
  for (int d : {2, 3, 4, 7}) {
    const double a = 1e-6;
    CHECK(rel(one_minus_transverse_average(d, a), a * a / (2 * (d - 1))) < 1e-6);
    CHECK(std::abs(one_minus_transverse_average(d, 1.3) - (1 - transverse_average(d, 1.3))) < 1e-14);
  }
}

TEST_CASE("zero separation gives zero rate") {
  for (int d : {2, 3, 4}) {
    const auto s = thermal_setup(d);
    CrossSectionModel m(SpaceDim(d), GaussianForward{1e-19, 0.3});
    DecoherenceOptions o;
    o.scheme = BathScheme::quadrature(6);
    const auto F = decoherence_rate(m, s.p, s.b, Vec::Zero(d), o);
    CHECK(F.re == 0.0);
    CHECK(F.im == 0.0);
  }
}

TEST_CASE("real part is nonnegative and F(-s) = conj F(s)") {
  const auto s = frozen_setup(3);
  CrossSectionModel m(SpaceDim(3), GaussianForward{1e-19, 0.4});
  RandomStream rng(99);
  const double k0 = s.p.k0.norm();
  for (int i = 0; i < 200; ++i) {
    const double mag = std::pow(10.0, -3 + 6 * rng.uniform()) / k0;
    const Vec sv = sample_isotropic(SpaceDim(3), rng) * mag;
    const auto F = decoherence_rate(m, s.p, s.b, sv);
    CHECK(F.re >= 0);
    const auto G = decoherence_rate(m, s.p, s.b, -sv);
    CHECK(std::abs(G.value() - std::conj(F.value())) <= 1e-8 * std::abs(F.value()) + 1e-12 * F.re + 1e-6);
  }
}

TEST_CASE("small separations follow the Kramers-Moyal quadratic form") {
  for (int d : {2, 3, 4}) {
    const auto s = frozen_setup(d);
    CrossSectionModel m(SpaceDim(d), GaussianForward{1e-19, 0.5});
    const Matrix a2 = km_diffusion(m, s.p, s.b, s.p.k0);
    const double k0 = s.p.k0.norm();
    const double scale = 0.03 / (k0 * 0.5);  // |s| k0 m_B/M = 0.03
    for (double ang : {0.0, 0.7, M_PI / 2}) {
      const Vec sv = direction(d, ang) * scale;
      const auto F = decoherence_rate(m, s.p, s.b, sv);
      CHECK(rel(F.re, 0.5 * sv.dot(a2 * sv)) < 0.01);
    }
  }
  // thermal bath: compare with the unfactorized moment
  const auto t = thermal_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  const BathScheme q8 = BathScheme::quadrature(8);
  const Matrix a2 = km_diffusion_exact(iso, t.p, t.b, t.p.k0, q8);
  DecoherenceOptions o;
  o.scheme = q8;
  const Vec sv = direction(3, 0.4) * (1e-3 / t.p.k0.norm());
  const auto F = decoherence_rate(iso, t.p, t.b, sv, o);
  CHECK(rel(F.re, 0.5 * sv.dot(a2 * sv)) < 0.01);
}

TEST_CASE("large separations saturate at the total collision rate") {
  const auto s = frozen_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  const double W = total_collision_rate(iso, s.p, s.b);
  const double k0 = s.p.k0.norm();
  // frozen bath: n v_rel sigma0 exactly
  const double k = 0.5 * k0;
  const double v = c::hbar * k / (0.5 * s.p.mass);
  CHECK(rel(W, s.b.density * v * 1e-19) < 1e-13);

  double acc = 0;
  int n = 0;
  for (double x = 500; x <= 1000; x += 12.5, ++n) {
    acc += decoherence_rate(iso, s.p, s.b, direction(3, 0.3) * (x / k0)).re;
  }
  CHECK(rel(acc / n, W) < 0.02);
}

TEST_CASE("thermal total rate: quadrature vs Monte Carlo") {
  const auto s = thermal_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  KinematicPair kin{s.p.mass, s.b.mass};
  RandomStream rng(4);
  const auto mc = bath_average_mc(
      [&](const Vec& kB) {
        return s.b.density * 1e-19 * kin.relative_v(kin.relative_k(s.p.k0, kB)).norm();
      },
      s.b, 200000, rng);
  CHECK(std::abs(total_collision_rate(iso, s.p, s.b) - mc.mean) < 3 * mc.std_error);
}

TEST_CASE("unresolvable oscillation raises a tolerance error") {
  const auto s = frozen_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  DecoherenceOptions o;
  o.max_order = 128;
  const Vec sv = direction(3, 0.2) * (1e4 / s.p.k0.norm());
  try {
    decoherence_rate(iso, s.p, s.b, sv, o);
    FAIL("expected ToleranceError");
  } catch (const ToleranceError& e) {
    CHECK(e.residual() >= 0);
  }
}

TEST_CASE("off-diagonal decay") {
  const auto s = frozen_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  auto rho0 = [](const Vec& x) { return std::complex<double>(0.3, 0.4) * std::exp(-x.squaredNorm() * 1e18); };
  const Vec sv = direction(3, 1.0) * (2.0 / s.p.k0.norm());
  CHECK(offdiagonal_decay(rho0, iso, s.p, s.b, sv, 0.0) == rho0(sv));
  const auto F0 = decoherence_rate(iso, s.p, s.b, Vec::Zero(3));
  CHECK(std::abs(offdiagonal_decay(rho0(Vec::Zero(3)), F0, 1e-3)) == doctest::Approx(0.5));
  const auto F = decoherence_rate(iso, s.p, s.b, sv);
  double prev = std::abs(rho0(sv));
  for (double t : {1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    const double now = std::abs(offdiagonal_decay(rho0(sv), F, t));
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("weak scattering diagnostic") {
  auto s = frozen_setup(3);
  CrossSectionModel iso(SpaceDim(3), Isotropic{1e-19});
  const auto w = weak_scattering(iso, s.p, s.b);
  CHECK(rel(w.k_lscat, s.p.k0.norm() / (s.b.density * 1e-19)) < 1e-12);
  CHECK(w.satisfied);
  s.b.density = 1e30;
  CHECK_FALSE(weak_scattering(iso, s.p, s.b).satisfied);
}

}  // TEST_SUITE
