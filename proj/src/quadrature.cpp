#include "fastdeco/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "fastdeco/errors.hpp"

namespace fastdeco {
namespace {

Rule1D build_legendre(int n) {
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      // P_n(z) and its derivative by the three-term recurrence
      double p0 = 1, p1 = z;
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1, p1 = z;
    for (int j = 2; j <= n; ++j) {
      double p2 = ((2 * j - 1) * z * p1 - (j - 1) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1);
    double w = 2 / ((1 - z * z) * dp * dp);
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = w;
    r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0;
  return r;
}

Rule1D build_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(static_cast<double>(i));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  double total = 0;
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    r.w[i] = v * v;
    total += r.w[i];
  }
  for (auto& w : r.w) w /= total;
  // symmetrize; the eigen solver leaves ~1e-15 asymmetry
  for (int i = 0; i < n / 2; ++i) {
    double x = 0.5 * (r.x[n - 1 - i] - r.x[i]);
    double w = 0.5 * (r.w[n - 1 - i] + r.w[i]);
    r.x[i] = -x;
    r.x[n - 1 - i] = x;
    r.w[i] = r.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0;
  return r;
}

template <class Build>
const Rule1D& cached(std::map<int, std::unique_ptr<Rule1D>>& cache,
                     std::mutex& mu, int n, Build build) {
  if (n < 1) throw DomainError("quadrature order must be >= 1");
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Rule1D>(build(n));
  return *slot;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  static std::map<int, std::unique_ptr<Rule1D>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, build_legendre);
}

Rule1D gauss_legendre(int n, double a, double b) {
  const Rule1D& ref = gauss_legendre(n);
  Rule1D r = ref;
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.x[i] = mid + half * ref.x[i];
    r.w[i] = half * ref.w[i];
  }
  return r;
}

const Rule1D& gauss_hermite(int n) {
  static std::map<int, std::unique_ptr<Rule1D>> cache;
  static std::mutex mu;
  return cached(cache, mu, n, build_hermite);
}

}  // namespace fastdeco
