#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fastdeco/geometry.hpp"

namespace fastdeco {

// Constant dsigma/dOmega = sigma0 / S_d.
struct Isotropic {
  double sigma0;
};

// dsigma/dOmega proportional to exp(-theta^2 / (2 theta0^2)), normalized to a
// total cross section sigma0.
struct GaussianForward {
  double sigma0;
  double theta0;
};

// dsigma/dOmega sampled on a full (k, theta) grid. values[ik * ntheta + it].
struct Tabulated {
  std::vector<double> k;
  std::vector<double> theta;
  std::vector<double> values;
};

enum class Moment { Total, Transfer, QPar, QPerp };

const char* moment_name(Moment m);

struct CrossSectionMoments {
  double k = 0;
  double sigma_total = 0;
  double sigma_tr = 0;
  double sigma_qpar = 0;   // int (1 - cos)^2 dsigma
  double sigma_qperp = 0;  // int sin^2 dsigma
  int order = 0;           // per-panel Gauss order that met the tolerance

  double get(Moment m) const;
};

struct AdaptiveOrder {
  int start = 64;
  int max = 1024;
  double rtol = 1e-9;
};

class CrossSectionModel {
public:
  using Kind = std::variant<Isotropic, GaussianForward, Tabulated>;

  CrossSectionModel(SpaceDim d, Kind kind, AdaptiveOrder adapt = {});

  // Reads a CSV with header `k,theta,dsdo` (SI units, theta in rad).
  static CrossSectionModel load_table(SpaceDim d, const std::string& path);
  static CrossSectionModel parse_table(SpaceDim d, std::istream& in,
                                       const std::string& name = "<table>");

  int dim() const { return d_; }
  const Kind& kind() const { return kind_; }
  std::string describe() const;
  bool depends_on_k() const;

  // dsigma/dOmega at (k, theta). Throws ModelError on a negative or
  // non-finite value.
  double evaluate(double k, double theta) const;

  // Polar angles where the integrand has kinks or sharp features; used as
  // panel edges by composite rules.
  const std::vector<double>& breakpoints() const { return breaks_; }

  // Polar rule adapted to the model (composite at the breakpoints).
  AngularQuadrature quadrature(int order) const;

  // Moments with automatic order doubling. Models without k dependence are
  // served from a cache filled at construction.
  CrossSectionMoments moments(double k) const;

private:
  CrossSectionMoments adaptive_moments(double k) const;

  int d_;
  Kind kind_;
  AdaptiveOrder adapt_;
  double gauss_norm_ = 0;
  std::vector<double> breaks_;
  std::optional<CrossSectionMoments> fixed_;
  std::vector<CrossSectionMoments> per_k_;  // tabulated: moments at table k
};

// Moments with an explicit rule.
CrossSectionMoments compute_moments(const CrossSectionModel& model, double k,
                                    const AngularQuadrature& quad);

double sigma_total(const CrossSectionModel& model, double k,
                   const AngularQuadrature& quad);
double sigma_tr(const CrossSectionModel& model, double k,
                const AngularQuadrature& quad);
double sigma_qpar(const CrossSectionModel& model, double k,
                  const AngularQuadrature& quad);
double sigma_qperp(const CrossSectionModel& model, double k,
                   const AngularQuadrature& quad);

struct ForwardEstimates {
  double sigma_qpar_approx;   // kappa sigma_tr^2 / sigma
  double sigma_qperp_approx;  // 2 sigma_tr
  double kurtosis;            // <theta^4> / <theta^2>^2
};

// Small-angle estimates of the quadratic moments. Throws RegimeError when
// sigma_tr / sigma >= threshold.
ForwardEstimates forward_moment_estimates(const CrossSectionModel& model,
                                          double k,
                                          const AngularQuadrature& quad,
                                          double threshold = 0.25);

struct TransferReport {
  double vector_residual;  // |int q dsigma + k sigma_tr Omega0| / (k sigma_tr)
  double scalar_residual;  // |int q^2 dsigma - 2 k^2 sigma_tr| / (2 k^2 sigma_tr)
  double max_residual;
};

// Integrates q = k (Omega - Omega0) and q^2 over the full sphere about an
// oblique Omega0 and compares with -k sigma_tr Omega0 and 2 k^2 sigma_tr.
TransferReport transfer_integral_checks(const CrossSectionModel& model,
                                        double k,
                                        const AngularQuadrature& quad);

}  // namespace fastdeco
