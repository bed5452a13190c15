#include "fastdeco/kinetics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Cholesky>

#include "fastdeco/constants.hpp"
#include "fastdeco/errors.hpp"

namespace fastdeco {

using constants::hbar;

Vec mean_momentum(const Vec& k0, double zeta, double t) {
  return k0 * std::exp(-zeta * t);
}

double traveled_distance(double v0, double zeta, double t) {
  if (zeta == 0) return v0 * t;
  return -v0 * std::expm1(-zeta * t) / zeta;
}

double stopping_range(double v0, double zeta) {
  if (zeta == 0) return std::numeric_limits<double>::infinity();
  return v0 / zeta;
}

double mean_square_momentum(double k0_norm2, double eta, double xi, int d,
                            double t) {
  if (eta == 0) return k0_norm2 + 2 * d * xi * t;
  const double eq = d * xi / eta;
  return (k0_norm2 - eq) * std::exp(-2 * eta * t) + eq;
}

VarianceSplit variance_split(double k0_norm2, double eta, double zeta,
                             double xi, int d, double t) {
  if (zeta < eta * (1 - 1e-12))
    throw DomainError("variance_split needs zeta >= eta");
  VarianceSplit v;
  // 1 - exp(-2 eta t) over eta, with the eta -> 0 limit 2t
  const double g = eta == 0 ? 2 * t : -std::expm1(-2 * eta * t) / eta;
  v.Kpar2 = xi * g;
  const double gap = -std::exp(-2 * eta * t) * std::expm1(-2 * (zeta - eta) * t);
  v.Kperp2 = k0_norm2 * gap / (d - 1) + v.Kpar2;
  v.K2 = v.Kpar2 + (d - 1) * v.Kperp2;
  return v;
}

double total_variance(double k0_norm2, double eta, double zeta, double xi,
                      int d, double t) {
  if (eta == 0) {
    return 2 * d * xi * t - k0_norm2 * std::expm1(-2 * zeta * t);
  }
  // d (xi/eta)(1 - e^{-2 eta t}) + k0^2 (e^{-2 eta t} - e^{-2 zeta t})
  const double e2 = std::exp(-2 * eta * t);
  return -d * (xi / eta) * std::expm1(-2 * eta * t) -
         k0_norm2 * e2 * std::expm1(-2 * (zeta - eta) * t);
}

VarianceSplit variance_split_exact(double k0_norm2, double eta, double gamma,
                                   double xi, int d, double t) {
  if (!(eta > 0)) throw DomainError("variance_split_exact needs eta > 0");
  const double zeta = eta + (d - 1) * gamma;
  const double eq = xi / eta;
  const double e2 = std::exp(-2 * eta * t);
  const double m_par = eq + (k0_norm2 - d * eq) * e2 / d +
                       k0_norm2 * (1 - 1.0 / d) * std::exp(-2 * (eta + d * gamma) * t);
  const double total = mean_square_momentum(k0_norm2, eta, xi, d, t);
  VarianceSplit v;
  v.Kpar2 = m_par - k0_norm2 * std::exp(-2 * zeta * t);
  v.Kperp2 = (total - m_par) / (d - 1);
  v.K2 = v.Kpar2 + (d - 1) * v.Kperp2;
  return v;
}

CoherenceState coherence_lengths(double Kpar2, double Kperp2,
                                 double l_thermal, double mean_k2) {
  if (Kpar2 < 0 || Kperp2 < 0 || std::isnan(Kpar2) || std::isnan(Kperp2))
    throw DomainError("coherence_lengths needs nonnegative variances");
  CoherenceState c;
  const double inf = std::numeric_limits<double>::infinity();
  c.par_infinite = Kpar2 == 0;
  c.perp_infinite = Kperp2 == 0;
  c.l_par = c.par_infinite ? inf : 0.5 / std::sqrt(Kpar2);
  c.l_perp = c.perp_infinite ? inf : 0.5 / std::sqrt(Kperp2);
  c.ratio = c.par_infinite || c.perp_infinite
                ? std::numeric_limits<double>::quiet_NaN()
                : c.l_par / c.l_perp;
  c.l_thermal = l_thermal;
  if (mean_k2 > 0) c.angular_variance = angular_variance(Kperp2, mean_k2);
  return c;
}

double thermal_coherence_length(double mass_S, double temperature) {
  if (!(mass_S > 0) || !(temperature > 0))
    throw DomainError("thermal length needs positive mass and temperature");
  return hbar / (2 * std::sqrt(mass_S * constants::boltzmann * temperature));
}

double short_time_ratio(double v0, double vB_rms, int d) {
  if (!(vB_rms > 0)) throw DomainError("bath rms speed must be > 0");
  const double r = v0 / vB_rms;
  return std::sqrt(1 + static_cast<double>(d) / (d - 1) * r * r);
}

double angular_variance(double Kperp2, double mean_k2) {
  if (!(mean_k2 > 0)) throw DomainError("angular_variance needs <k^2> > 0");
  return Kperp2 / mean_k2;
}

std::vector<double> log_time_grid(double eta, double lo, double hi,
                                  int points) {
  if (!(eta > 0) || !(lo > 0) || !(hi > lo) || points < 2)
    throw DomainError("bad log time grid");
  std::vector<double> t(points);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i)
    t[i] = std::exp(a + (b - a) * i / (points - 1)) / eta;
  t.back() = hi / eta;
  return t;
}

MomentState analytic_state(const Vec& k0, double mass_S,
                           const TransportCoefficients& c, double t) {
  const int d = static_cast<int>(k0.size());
  const double k02 = k0.squaredNorm();
  MomentState s;
  s.t = t;
  s.mean_k = mean_momentum(k0, c.zeta, t);
  s.mean_k2 = mean_square_momentum(k02, c.eta, c.xi, d, t);
  const auto v = variance_split(k02, c.eta, c.zeta, c.xi, d, t);
  s.Kpar2 = v.Kpar2;
  s.Kperp2 = v.Kperp2;
  s.K2 = v.K2;
  s.traveled = traveled_distance(hbar * std::sqrt(k02) / mass_S, c.zeta, t);
  s.mean_energy = hbar * hbar * s.mean_k2 / (2 * mass_S);
  return s;
}

std::vector<MomentState> analytic_trajectory(const Vec& k0, double mass_S,
                                             const TransportCoefficients& c,
                                             const std::vector<double>& times) {
  std::vector<MomentState> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(analytic_state(k0, mass_S, c, t));
  return out;
}

std::vector<MomentState> energy_updating_trajectory(
    const Vec& k0, double mass_S, const CoefficientProvider& provider,
    const std::vector<double>& times, double max_step_factor) {
  const int d = static_cast<int>(k0.size());
  const double k0n = k0.norm();
  if (!(k0n > 0)) throw DomainError("energy-updating mode needs |k0| > 0");
  const Vec u = k0 / k0n;
  // y = (|<k>|, <k^2>, Kpar2, traveled)
  using Y = std::array<double, 4>;
  auto rhs = [&](const Y& y) {
    const auto c = provider(u * y[0]);
    return Y{-c.zeta * y[0], -2 * c.eta * y[1] + 2 * d * c.xi,
             2 * c.xi - 2 * c.eta * y[2], hbar * y[0] / mass_S};
  };
  auto axpy = [](const Y& a, double h, const Y& b) {
    Y r;
    for (int i = 0; i < 4; ++i) r[i] = a[i] + h * b[i];
    return r;
  };
  Y y{k0n, k0n * k0n, 0, 0};
  double t = 0;
  std::vector<MomentState> out;
  for (double target : times) {
    if (target < t) throw DomainError("time grid must be nondecreasing");
    while (t < target) {
      const auto c = provider(u * y[0]);
      const double rate = std::max({c.zeta, 2 * c.eta, 1e-300});
      double h = std::min(target - t, max_step_factor / rate);
      if (target - t - h < 1e-12 * target) h = target - t;
      const Y k1 = rhs(y);
      const Y k2 = rhs(axpy(y, 0.5 * h, k1));
      const Y k3 = rhs(axpy(y, 0.5 * h, k2));
      const Y k4 = rhs(axpy(y, h, k3));
      for (int i = 0; i < 4; ++i)
        y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      t += h;
    }
    MomentState s;
    s.t = target;
    s.mean_k = u * y[0];
    s.mean_k2 = y[1];
    s.Kpar2 = y[2];
    s.Kperp2 = (y[1] - y[0] * y[0] - y[2]) / (d - 1);
    s.K2 = s.Kpar2 + (d - 1) * s.Kperp2;
    s.traveled = y[3];
    s.mean_energy = hbar * hbar * y[1] / (2 * mass_S);
    out.push_back(s);
  }
  return out;
}

CoherenceMatrixResult coherence_matrix_from_wigner(const WignerGaussian& w,
                                                   const WignerGrid& grid) {
  const int d = static_cast<int>(w.mean_k.size());
  if (w.cov.rows() != d || w.cov.cols() != d)
    throw DomainError("covariance dimension mismatch");
  Eigen::LLT<Matrix> llt(w.cov);
  if (llt.info() != Eigen::Success)
    throw DomainError("covariance must be positive definite");
  const int n = grid.points;
  if (n < 9) throw DomainError("wigner grid needs >= 9 points per axis");
  const Matrix prec = llt.solve(Matrix::Identity(d, d));

  std::vector<double> h(d), lo(d);
  for (int a = 0; a < d; ++a) {
    const double sd = std::sqrt(w.cov(a, a));
    lo[a] = w.mean_k(a) - grid.span * sd;
    h[a] = 2 * grid.span * sd / (n - 1);
  }
  std::vector<long> stride(d);
  long total = 1;
  for (int a = 0; a < d; ++a) {
    stride[a] = total;
    total *= n;
  }
  std::vector<double> f(total);
  std::vector<int> idx(d);
  double fmax = 0, fbound = 0;
  Vec k(d);
  for (long p = 0; p < total; ++p) {
    long q = p;
    bool edge = false;
    for (int a = 0; a < d; ++a) {
      idx[a] = static_cast<int>(q % n);
      q /= n;
      k(a) = lo[a] + h[a] * idx[a];
      edge = edge || idx[a] == 0 || idx[a] == n - 1;
    }
    const Vec x = k - w.mean_k;
    f[p] = std::exp(-0.5 * x.dot(prec * x));
    fmax = std::max(fmax, f[p]);
    if (edge) fbound = std::max(fbound, f[p]);
  }

  // fourth-order central stencils
  const double c1[2] = {8.0 / 12, -1.0 / 12};             // offsets 1, 2
  const double c2[3] = {-30.0 / 12, 16.0 / 12, -1.0 / 12};  // offsets 0, 1, 2
  Matrix G = Matrix::Zero(d, d), H = Matrix::Zero(d, d);
  double norm = 0;
  Vec grad(d);
  Matrix hess(d, d);
  for (long p = 0; p < total; ++p) {
    long q = p;
    bool inner = true;
    for (int a = 0; a < d; ++a) {
      idx[a] = static_cast<int>(q % n);
      q /= n;
      inner = inner && idx[a] >= 2 && idx[a] < n - 2;
    }
    norm += f[p] * f[p];
    if (!inner) continue;
    for (int a = 0; a < d; ++a) {
      const long s = stride[a];
      grad(a) = (c1[0] * (f[p + s] - f[p - s]) +
                 c1[1] * (f[p + 2 * s] - f[p - 2 * s])) / h[a];
      hess(a, a) = (c2[0] * f[p] + c2[1] * (f[p + s] + f[p - s]) +
                    c2[2] * (f[p + 2 * s] + f[p - 2 * s])) / (h[a] * h[a]);
      for (int b = 0; b < a; ++b) {
        const long t = stride[b];
        double acc = 0;
        for (int i = 1; i <= 2; ++i) {
          for (int j = 1; j <= 2; ++j) {
            const double c = c1[i - 1] * c1[j - 1];
            acc += c * (f[p + i * s + j * t] - f[p + i * s - j * t] -
                        f[p - i * s + j * t] + f[p - i * s - j * t]);
          }
        }
        hess(a, b) = hess(b, a) = acc / (h[a] * h[b]);
      }
    }
    G += grad * grad.transpose();
    H -= f[p] * hess;
  }
  CoherenceMatrixResult r;
  r.gradient_form = G / (2 * norm);
  r.hessian_form = H / (2 * norm);
  r.truncation = fmax > 0 ? fbound / fmax : 0;
  return r;
}

}  // namespace fastdeco
