#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "fastdeco/bath.hpp"
#include "fastdeco/constants.hpp"
#include "fastdeco/errors.hpp"
#include "fastdeco/kinetics.hpp"

using namespace fastdeco;
namespace c = fastdeco::constants;
namespace odeint = boost::numeric::odeint;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Heavy particle in an electron gas with velocity ratio 7, d = 3.
TransportCoefficients heavy_coeffs(double* k02_out = nullptr) {
  BathSpec b;
  b.d = SpaceDim(3);
  b.mass = c::electron_mass;
  const double vB = c::fine_structure * c::speed_of_light;
  b.temperature = b.mass * vB * vB / (3 * c::boltzmann);
  b.density = 1e25;
  const double mS = 1000 * c::electron_mass;
  const auto t = coefficients_from_alpha_tr(1e12, mS, b);
  if (k02_out) *k02_out = std::pow(mS * 7 * vB / c::hbar, 2);
  return t;
}

using State = std::vector<double>;

// Second moments M = <k k^T> and mean m under the Fokker-Planck generator:
//   dm/dt = -zeta m
//   dM/dt = -2 eta M + 2 xi I + 2 gamma (tr(M) I - d M)
struct MomentOde {
  int d;
  double eta, gamma, xi, zeta;
  void operator()(const State& y, State& dy, double) const {
    const int n = d * d;
    double tr = 0;
    for (int i = 0; i < d; ++i) tr += y[i * d + i];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double m = y[i * d + j];
        dy[i * d + j] = -2 * eta * m + (i == j ? 2 * xi + 2 * gamma * tr : 0) -
                        2 * gamma * d * m;
      }
    for (int i = 0; i < d; ++i) dy[n + i] = -zeta * y[n + i];
  }
};

VarianceSplit integrate_moments(int d, double k02, const TransportCoefficients& t,
                                double time) {
  State y(d * d + d, 0.0);
  y[0] = k02;
  y[d * d] = std::sqrt(k02);
  MomentOde ode{d, t.eta, t.gamma, t.xi, t.zeta};
  odeint::integrate_adaptive(
      odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-13, 1e-13), ode,
      y, 0.0, time, time * 1e-4);
  VarianceSplit v;
  const double mean = y[d * d];
  v.Kpar2 = y[0] - mean * mean;
  v.Kperp2 = y[d + 1];
  v.K2 = v.Kpar2 + (d - 1) * v.Kperp2;
  return v;
}

}  // namespace

TEST_SUITE("kinetics") {

TEST_CASE("mean momentum") {
  Vec k0(3);
  k0 << 1.0, -2.0, 0.5;
  CHECK((mean_momentum(k0, 3.0, 0.0) - k0).norm() == 0.0);
  CHECK((mean_momentum(k0, 2.0, std::log(2.0) / 2) - k0 / 2).norm() < 1e-15);
  // adaptive ODE oracle
  for (double zeta : {0.3, 7.0}) {
    for (double t : {0.01, 1.0, 3.0}) {
      std::vector<double> y{k0(0), k0(1), k0(2)};
      odeint::integrate_adaptive(
          odeint::make_controlled<odeint::runge_kutta_dopri5<std::vector<double>>>(0.0, 1e-13),
          [zeta](const std::vector<double>& x, std::vector<double>& dx, double) {
            for (int i = 0; i < 3; ++i) dx[i] = -zeta * x[i];
          },
          y, 0.0, t, 1e-3);
      const Vec m = mean_momentum(k0, zeta, t);
      for (int i = 0; i < 3; ++i) CHECK(rel(m(i), y[i]) < 1e-9);
    }
  }
}

TEST_CASE("traveled distance and range") {
  CHECK(traveled_distance(3.0, 2.0, 1e9) == doctest::Approx(1.5));
  CHECK(stopping_range(3.0, 2.0) == 1.5);
  CHECK(traveled_distance(3.0, 0.0, 2.0) == 6.0);
  CHECK(std::isinf(stopping_range(3.0, 0.0)));
  CHECK(rel(traveled_distance(5.0, 0.01, 1.0), 5.0) < 0.005);
  // alpha: v0 = 0.052 c and a 3.5 cm range
  const double v0 = 0.052 * c::speed_of_light;
  const double zeta = v0 / 0.035;
  CHECK(rel(zeta, 4.45e8) < 2e-3);
  CHECK(rel(stopping_range(v0, zeta), 0.035) < 1e-15);
}

TEST_CASE("mean square momentum") {
  const double k02 = 4.0, eta = 0.5, xi = 0.3;
  CHECK(mean_square_momentum(k02, eta, xi, 3, 0.0) == k02);
  CHECK(rel(mean_square_momentum(k02, eta, xi, 3, 1e3), 3 * xi / eta) < 1e-14);
  CHECK(mean_square_momentum(k02, 0.0, xi, 3, 2.0) == doctest::Approx(k02 + 2 * 3 * xi * 2));
  CHECK(mean_square_momentum(k02, eta, 0.0, 2, 1.0) == doctest::Approx(k02 * std::exp(-1.0)));
  // mean energy thermalizes at d k_B T / 2 with rate 2 eta
  const double mS = 10 * c::atomic_mass_unit, T = 300;
  const double xi_t = eta * mS * c::boltzmann * T / (c::hbar * c::hbar);
  const double E0 = c::hbar * c::hbar * 1e22 / (2 * mS);
  for (double t : {0.1, 1.0, 5.0}) {
    const double E = c::hbar * c::hbar * mean_square_momentum(1e22, eta, xi_t, 3, t) / (2 * mS);
    const double Eth = 1.5 * c::boltzmann * T;
    CHECK(rel(E, Eth + (E0 - Eth) * std::exp(-2 * eta * t)) < 1e-12);
  }
}

TEST_CASE("variance split: limits and decomposition") {
  double k02;
  const auto t = heavy_coeffs(&k02);
  const int d = 3;
  CHECK_THROWS_AS(variance_split(k02, 1.0, 0.5, 1.0, d, 1.0), DomainError);

  const double ts = 1e-4 / t.eta;
  const auto s = variance_split(k02, t.eta, t.zeta, t.xi, d, ts);
  CHECK(rel(s.Kpar2, 2 * t.xi * ts) < 0.01);
  CHECK(rel(s.Kperp2, 2 * k02 * t.gamma * ts + 2 * t.xi * ts) < 0.01);

  const auto l = variance_split(k02, t.eta, t.zeta, t.xi, d, 40 / t.eta);
  CHECK(rel(l.Kpar2, t.xi / t.eta) < 1e-12);
  CHECK(rel(l.Kperp2, t.xi / t.eta) < 1e-12);

  for (double x : log_time_grid(t.eta)) {
    const auto v = variance_split(k02, t.eta, t.zeta, t.xi, d, x);
    CHECK(rel(v.K2, v.Kpar2 + (d - 1) * v.Kperp2) < 1e-12);
    CHECK(rel(v.K2, total_variance(k02, t.eta, t.zeta, t.xi, d, x)) < 1e-12);
    // <k^2> - |<k>|^2 by subtraction loses digits to cancellation
    const double direct = mean_square_momentum(k02, t.eta, t.xi, d, x) -
                          mean_momentum(Vec::Constant(1, std::sqrt(k02)), t.zeta, x).squaredNorm();
    CHECK(rel(v.K2, direct) < 1e-8);
  }
}

TEST_CASE("full second-moment solution against an ODE oracle") {
  double k02;
  const auto t = heavy_coeffs(&k02);
  for (double et : {0.01, 0.1, 1.0, 5.0}) {
    const auto e = variance_split_exact(k02, t.eta, t.gamma, t.xi, 3, et / t.eta);
    const auto o = integrate_moments(3, k02, t, et / t.eta);
    CHECK(rel(e.Kperp2, o.Kperp2) < 1e-7);
    CHECK(rel(e.K2, o.K2) < 1e-7);
    // Kpar2 is a small difference of large numbers early on
    CHECK(std::abs(e.Kpar2 - o.Kpar2) < 1e-7 * o.Kperp2 + 1e-6 * o.Kpar2);
  }
  // d = 2 and 4 with stronger rotational diffusion
  for (int d : {2, 4}) {
    TransportCoefficients c2{d, 0, 1.0, 1.0 + (d - 1) * 0.3, 0.3, 2.0};
    for (double x : {0.05, 0.5, 2.0}) {
      const auto e = variance_split_exact(9.0, c2.eta, c2.gamma, c2.xi, d, x);
      const auto o = integrate_moments(d, 9.0, c2, x);
      CHECK(rel(e.Kpar2, o.Kpar2) < 1e-8);
      CHECK(rel(e.Kperp2, o.Kperp2) < 1e-8);
    }
  }
}

TEST_CASE("coherence lengths") {
  const auto s = coherence_lengths(4.0, 0.25, 1.0, 10.0);
  CHECK(s.l_par == 0.25);
  CHECK(s.l_perp == 1.0);
  CHECK(s.ratio == 0.25);
  CHECK(s.angular_variance == 0.025);
  const auto z = coherence_lengths(0.0, 1.0);
  CHECK(z.par_infinite);
  CHECK(std::isinf(z.l_par));
  CHECK_THROWS_AS(coherence_lengths(-1.0, 1.0), DomainError);

  const double alpha_mass = c::mass_from_mev(3727.0);
  CHECK(rel(thermal_coherence_length(alpha_mass, 300), 1e-11) < 0.05);

  const double r = short_time_ratio(0.052 * c::speed_of_light, c::speed_of_light / 137, 3);
  CHECK(r == doctest::Approx(8.7).epsilon(0.1 / 8.7 * 2));
  CHECK(std::abs(r - 8.7) < 0.1 + 0.1);
  CHECK(rel(r, std::sqrt(1 + 1.5 * std::pow(0.052 * 137, 2))) < 1e-12);
}

TEST_CASE("angular variance at short times") {
  CHECK(angular_variance(0.0, 5.0) == 0.0);
  const double k02 = 1e20, gamma = 1.0, eta = 0.002;
  const double zeta = eta + 2 * gamma;
  const double t = 1e-4 / gamma;
  const auto v = variance_split(k02, eta, zeta, 0.0, 3, t);
  const double th2 = angular_variance(v.Kperp2, mean_square_momentum(k02, eta, 0.0, 3, t));
  CHECK(rel(th2, 2 * gamma * t) < 0.01);
  // perpendicular length from the angular spread
  const double lambda = 2 * M_PI / std::sqrt(k02);
  CHECK(rel(coherence_lengths(v.Kpar2 + 1e-30, v.Kperp2).l_perp,
            lambda / (4 * M_PI * std::sqrt(th2))) < 0.01);
}

TEST_CASE("heavy-particle trajectory: undershoot, slopes and thermal limit") {
  double k02;
  const auto t = heavy_coeffs(&k02);
  const double mS = 1000 * c::electron_mass;
  Vec k0 = Vec::Zero(3);
  k0(0) = std::sqrt(k02);
  const double T = c::electron_mass * std::pow(c::fine_structure * c::speed_of_light, 2) /
                   (3 * c::boltzmann);
  const double lT = thermal_coherence_length(mS, T);
  const auto times = log_time_grid(t.eta);
  CHECK(times.size() == 100);
  CHECK(rel(times.front() * t.eta, 1e-4) < 1e-12);
  CHECK(rel(times.back() * t.eta, 10) < 1e-12);
  const auto traj = analytic_trajectory(k0, mS, t, times);
  double min_par = 1e9, min_perp = 1e9;
  for (const auto& s : traj) {
    const auto cl = coherence_lengths(s.Kpar2, s.Kperp2, lT);
    min_par = std::min(min_par, cl.l_par / lT);
    min_perp = std::min(min_perp, cl.l_perp / lT);
    CHECK(s.mean_k2 >= s.mean_k.squaredNorm());
  }
  CHECK(min_perp < 1);
  CHECK(min_par >= 1);
  const auto a = coherence_lengths(traj[0].Kpar2, traj[0].Kperp2);
  const auto b = coherence_lengths(traj[1].Kpar2, traj[1].Kperp2);
  const double dl = std::log(times[1] / times[0]);
  CHECK(std::log(b.l_par / a.l_par) / dl == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(std::log(b.l_perp / a.l_perp) / dl == doctest::Approx(-0.5).epsilon(0.02));
  const auto e = coherence_lengths(traj.back().Kpar2, traj.back().Kperp2);
  CHECK(rel(e.l_par, lT) < 0.01);
  CHECK(rel(e.l_perp, lT) < 0.01);
}

TEST_CASE("energy-updating mode with fixed coefficients reproduces the closed form") {
  double k02;
  const auto t = heavy_coeffs(&k02);
  const double mS = 1000 * c::electron_mass;
  Vec k0 = Vec::Zero(3);
  k0(0) = std::sqrt(k02);
  const auto times = log_time_grid(t.eta, 1e-3, 5, 12);
  const auto upd = energy_updating_trajectory(k0, mS, [&](const Vec&) { return t; }, times);
  const auto ref = analytic_trajectory(k0, mS, t, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(rel(upd[i].mean_k2, ref[i].mean_k2) < 1e-6);
    CHECK(rel(upd[i].mean_k(0), ref[i].mean_k(0)) < 1e-6);
    CHECK(rel(upd[i].traveled, ref[i].traveled) < 1e-6);
  }
}

TEST_CASE("coherence matrix from a gaussian wigner function") {
  WignerGaussian iso{Vec::Zero(3), Matrix::Identity(3, 3) * 4.0};
  const auto r = coherence_matrix_from_wigner(iso);
  CHECK((r.gradient_form - Matrix::Identity(3, 3) / 16.0).cwiseAbs().maxCoeff() < 1e-3 / 16);
  CHECK(r.truncation < 1e-6);

  Matrix cov = Matrix::Zero(3, 3);
  cov.diagonal() << 1.0, 9.0, 0.25;
  Vec mean(3);
  mean << 5.0, -1.0, 0.0;
  const auto a = coherence_matrix_from_wigner({mean, cov});
  for (int i = 0; i < 3; ++i)
    CHECK(rel(a.gradient_form(i, i), 0.25 / cov(i, i)) < 1e-3);
  CHECK((a.hessian_form - a.gradient_form).cwiseAbs().maxCoeff() <
        5e-3 * a.gradient_form.cwiseAbs().maxCoeff());
  // l^2 (hbar^2 K^2) = hbar^2 / 4: the uncertainty bound is attained
  const Matrix prod = a.gradient_form * cov;
  CHECK((prod - Matrix::Identity(3, 3) * 0.25).cwiseAbs().maxCoeff() < 1e-3);
}

}  // TEST_SUITE
