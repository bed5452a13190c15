#include "fastdeco/bath.hpp"

#include <algorithm>

#include "fastdeco/constants.hpp"

namespace fastdeco {

using constants::hbar;

double BathSpec::thermal_k2() const {
  if (distribution == BathDistribution::Frozen) return 0;
  return mass * constants::boltzmann * temperature / (hbar * hbar);
}

void BathSpec::validate() const {
  if (!(mass > 0)) throw DomainError("bath mass must be > 0");
  if (!(temperature >= 0)) throw DomainError("bath temperature must be >= 0");
  if (!(density > 0)) throw DomainError("bath density must be > 0");
}

Vec KinematicPair::relative_k(const Vec& k_S, const Vec& k_B) const {
  return (mass_B * k_S - mass_S * k_B) / total_mass();
}

Vec KinematicPair::relative_v(const Vec& k) const {
  return hbar * k / reduced_mass();
}

namespace detail {
void throw_propagation(const Vec& k_B) {
  std::ostringstream os;
  os << "non-finite value in bath average at k_B = (";
  for (Eigen::Index i = 0; i < k_B.size(); ++i)
    os << (i ? ", " : "") << k_B(i);
  os << ")";
  throw PropagationError(os.str());
}
}  // namespace detail

double Rates::get(Moment m) const {
  switch (m) {
    case Moment::Total: return total;
    case Moment::Transfer: return tr;
    case Moment::QPar: return qpar;
    case Moment::QPerp: return qperp;
  }
  return 0;
}

namespace {

void check_dims(const CrossSectionModel& model, const BathSpec& bath,
                const Vec& k_S) {
  if (model.dim() != bath.d || k_S.size() != bath.d)
    throw DomainError("dimension mismatch between model, bath and k_S");
}

}  // namespace

Rates collisional_rates(const CrossSectionModel& model,
                        const ParticleSpec& particle, const BathSpec& bath,
                        const Vec& k_S, const BathScheme& scheme) {
  check_dims(model, bath, k_S);
  const KinematicPair kin{particle.mass, bath.mass};
  const double m = kin.reduced_mass();
  auto f = [&](const Vec& k_B) -> Vec {
    const double k = kin.relative_k(k_S, k_B).norm();
    Vec r = Vec::Zero(4);
    if (k == 0) return r;
    const auto mom = model.moments(k);
    const double nv = bath.density * hbar * k / m;
    r << nv * mom.sigma_total, nv * mom.sigma_tr, nv * mom.sigma_qpar,
        nv * mom.sigma_qperp;
    return r;
  };
  Vec a = bath_average(f, bath, scheme);
  return {a(0), a(1), a(2), a(3)};
}

double collisional_rate(Moment mu, const CrossSectionModel& model,
                        const ParticleSpec& particle, const BathSpec& bath,
                        const Vec& k_S, const BathScheme& scheme) {
  return collisional_rates(model, particle, bath, k_S, scheme).get(mu);
}

Vec km_drift(const Rates& r, const KinematicPair& kin, const Vec& k_S) {
  return -(kin.mass_B / kin.total_mass()) * r.tr * k_S;
}

Matrix km_diffusion(const Rates& r, const KinematicPair& kin,
                    const BathSpec& bath, const Vec& k_S) {
  const int d = bath.d;
  const double M = kin.total_mass();
  const double b2 = (kin.mass_B / M) * (kin.mass_B / M);
  const double s2 = (kin.mass_S / M) * (kin.mass_S / M);
  const Matrix kk = k_S * k_S.transpose();
  const Matrix I = Matrix::Identity(d, d);
  return r.qpar * b2 * kk +
         r.qperp * b2 * (k_S.squaredNorm() * I - kk) / (d - 1) +
         2 * r.tr * s2 * bath.thermal_k2() * I;
}

Vec km_drift(const CrossSectionModel& model, const ParticleSpec& particle,
             const BathSpec& bath, const Vec& k_S, const BathScheme& scheme) {
  const auto r = collisional_rates(model, particle, bath, k_S, scheme);
  return km_drift(r, {particle.mass, bath.mass}, k_S);
}

Matrix km_diffusion(const CrossSectionModel& model,
                    const ParticleSpec& particle, const BathSpec& bath,
                    const Vec& k_S, const BathScheme& scheme) {
  const auto r = collisional_rates(model, particle, bath, k_S, scheme);
  return km_diffusion(r, {particle.mass, bath.mass}, bath, k_S);
}

Vec km_drift_exact(const CrossSectionModel& model,
                   const ParticleSpec& particle, const BathSpec& bath,
                   const Vec& k_S, const BathScheme& scheme) {
  check_dims(model, bath, k_S);
  const KinematicPair kin{particle.mass, bath.mass};
  auto f = [&](const Vec& k_B) -> Vec {
    const Vec k = kin.relative_k(k_S, k_B);
    const double kn = k.norm();
    if (kn == 0) return Vec::Zero(k.size());
    const double nv = bath.density * hbar * kn / kin.reduced_mass();
    return -nv * model.moments(kn).sigma_tr * k;
  };
  return bath_average(f, bath, scheme);
}

Matrix km_diffusion_exact(const CrossSectionModel& model,
                          const ParticleSpec& particle, const BathSpec& bath,
                          const Vec& k_S, const BathScheme& scheme) {
  check_dims(model, bath, k_S);
  const KinematicPair kin{particle.mass, bath.mass};
  const int d = bath.d;
  auto f = [&](const Vec& k_B) -> Matrix {
    const Vec k = kin.relative_k(k_S, k_B);
    const double kn = k.norm();
    if (kn == 0) return Matrix::Zero(d, d);
    const double nv = bath.density * hbar * kn / kin.reduced_mass();
    const auto mom = model.moments(kn);
    const Vec u = k / kn;
    const Matrix uu = u * u.transpose();
    return nv * kn * kn *
           (mom.sigma_qpar * uu +
            mom.sigma_qperp * (Matrix::Identity(d, d) - uu) / (d - 1));
  };
  return bath_average(f, bath, scheme);
}

double angular_tensor_check(SpaceDim d, double theta, std::size_t n,
                            RandomStream& rng) {
  const int dim = d;
  Vec omega0 = Vec::Ones(dim) / std::sqrt(static_cast<double>(dim));
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix acc = Matrix::Zero(dim, dim);
  const std::size_t pairs = std::max<std::size_t>(1, n / 2);
  for (std::size_t i = 0; i < pairs; ++i) {
    const Vec perp = random_tangent_direction(omega0, rng);
    const Vec a = c * omega0 + s * perp;
    const Vec b = c * omega0 - s * perp;
    acc += a * a.transpose() + b * b.transpose();
  }
  acc /= static_cast<double>(2 * pairs);
  const Matrix P = omega0 * omega0.transpose();
  const Matrix expect =
      c * c * P + s * s * (Matrix::Identity(dim, dim) - P) / (dim - 1);
  return (acc - expect).cwiseAbs().maxCoeff();
}

TransportCoefficients coefficients_from_alpha_tr(double alpha_tr,
                                                 double mass_S,
                                                 const BathSpec& bath) {
  const double mB = bath.mass, M = mass_S + mB;
  const int d = bath.d;
  TransportCoefficients t;
  t.d = d;
  t.alpha_tr = alpha_tr;
  t.eta = mass_S * mB / (M * M) * alpha_tr;
  t.gamma = mB * mB / (M * M) * alpha_tr / (d - 1);
  t.xi = mass_S * mass_S / (M * M) * alpha_tr * bath.thermal_k2();
  t.zeta = mB / M * alpha_tr;
  return t;
}

TransportCoefficients transport_coefficients(const CrossSectionModel& model,
                                             const ParticleSpec& particle,
                                             const BathSpec& bath,
                                             const Vec& k_S,
                                             const BathScheme& scheme) {
  const double a = collisional_rates(model, particle, bath, k_S, scheme).tr;
  return coefficients_from_alpha_tr(a, particle.mass, bath);
}

double eta_from_stopping(double stopping_power, double mean_energy,
                         double mean_speed) {
  if (!(stopping_power >= 0))
    throw DomainError("stopping power must be >= 0");
  if (!(mean_energy > 0)) throw DomainError("mean energy must be > 0");
  if (!(mean_speed > 0)) throw DomainError("mean speed must be > 0");
  return mean_speed * stopping_power / (2 * mean_energy);
}

RateTable::RateTable(const CrossSectionModel& model,
                     const ParticleSpec& particle, const BathSpec& bath,
                     double k_max, int points, const BathScheme& scheme)
    : k_max_(k_max) {
  if (points < 2 || !(k_max > 0))
    throw DomainError("rate table needs >= 2 points and k_max > 0");
  const int d = bath.d;
  for (int i = 0; i < points; ++i) {
    Vec k = Vec::Zero(d);
    k(0) = k_max * i / (points - 1);
    rows_.push_back(collisional_rates(model, particle, bath, k, scheme));
  }
}

RateTable RateTable::constant(const Rates& r) {
  RateTable t;
  t.rows_.push_back(r);
  return t;
}

Rates RateTable::at(double k_norm) const {
  if (rows_.size() == 1) return rows_[0];
  const double x = std::clamp(k_norm / k_max_, 0.0, 1.0) * (rows_.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(x), rows_.size() - 2);
  const double t = x - i;
  const Rates& a = rows_[i];
  const Rates& b = rows_[i + 1];
  return {(1 - t) * a.total + t * b.total, (1 - t) * a.tr + t * b.tr,
          (1 - t) * a.qpar + t * b.qpar, (1 - t) * a.qperp + t * b.qperp};
}

}  // namespace fastdeco
