#include "fastdeco/xsection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "fastdeco/errors.hpp"

namespace fastdeco {

using std::numbers::pi;

const char* moment_name(Moment m) {
  switch (m) {
    case Moment::Total: return "total";
    case Moment::Transfer: return "tr";
    case Moment::QPar: return "qpar";
    case Moment::QPerp: return "qperp";
  }
  return "?";
}

double CrossSectionMoments::get(Moment m) const {
  switch (m) {
    case Moment::Total: return sigma_total;
    case Moment::Transfer: return sigma_tr;
    case Moment::QPar: return sigma_qpar;
    case Moment::QPerp: return sigma_qperp;
  }
  return 0;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Position of x in a sorted grid: index i and fraction t in [0, 1] such that
// x ~ (1 - t) g[i] + t g[i + 1]; clamped at both ends.
std::pair<std::size_t, double> locate(const std::vector<double>& g, double x) {
  if (g.size() == 1 || x <= g.front()) return {0, 0.0};
  if (x >= g.back()) return {g.size() - 2, 1.0};
  auto it = std::upper_bound(g.begin(), g.end(), x);
  std::size_t i = static_cast<std::size_t>(it - g.begin()) - 1;
  return {i, (x - g[i]) / (g[i + 1] - g[i])};
}

double table_value(const Tabulated& t, double k, double theta) {
  const std::size_t nt = t.theta.size();
  auto [ik, tk] = locate(t.k, k);
  auto row = [&](std::size_t i) {
    if (nt == 1) return t.values[i];
    double th = std::clamp(theta, t.theta.front(), t.theta.back());
    auto [j, ignored] = locate(t.theta, th);
    (void)ignored;
    // linear in cos(theta) within the panel
    double c0 = std::cos(t.theta[j]), c1 = std::cos(t.theta[j + 1]);
    double u = (c0 - std::cos(th)) / (c0 - c1);
    u = std::clamp(u, 0.0, 1.0);
    return (1 - u) * t.values[i * nt + j] + u * t.values[i * nt + j + 1];
  };
  if (t.k.size() == 1 || tk == 0.0) return row(ik);
  if (tk == 1.0) return row(ik + 1);
  return (1 - tk) * row(ik) + tk * row(ik + 1);
}

}  // namespace

CrossSectionModel::CrossSectionModel(SpaceDim d, Kind kind, AdaptiveOrder adapt)
    : d_(d), kind_(std::move(kind)), adapt_(adapt) {
  std::visit(
      overloaded{
          [&](const Isotropic& m) {
            if (!(m.sigma0 >= 0)) throw DomainError("sigma0 must be >= 0");
          },
          [&](const GaussianForward& m) {
            if (!(m.sigma0 >= 0)) throw DomainError("sigma0 must be >= 0");
            if (!(m.theta0 > 0)) throw DomainError("theta0 must be > 0");
            for (int j = 1; j <= 12; ++j) breaks_.push_back(j * m.theta0);
            // normalization by a fine composite rule
            auto q = polar_quadrature(d, 96, breaks_);
            double s = 0;
            for (const auto& n : q.nodes) {
              double x = n.theta / m.theta0;
              s += n.solid_angle * std::exp(-0.5 * x * x);
            }
            gauss_norm_ = m.sigma0 / s;
          },
          [&](const Tabulated& t) {
            if (t.k.empty() || t.theta.empty() ||
                t.values.size() != t.k.size() * t.theta.size())
              throw DomainError("tabulated cross section needs a full grid");
            if (!std::is_sorted(t.k.begin(), t.k.end()) ||
                !std::is_sorted(t.theta.begin(), t.theta.end()))
              throw DomainError("table grids must be sorted");
            breaks_ = t.theta;
          }},
      kind_);

  // Fill caches. A model that yields invalid samples is still constructible;
  // the error surfaces when it is integrated.
  try {
    if (std::holds_alternative<Tabulated>(kind_)) {
      for (double k : std::get<Tabulated>(kind_).k)
        per_k_.push_back(adaptive_moments(k));
    } else {
      fixed_ = adaptive_moments(1.0);
    }
  } catch (const ModelError&) {
    per_k_.clear();
    fixed_.reset();
  }
}

bool CrossSectionModel::depends_on_k() const {
  if (auto* t = std::get_if<Tabulated>(&kind_)) return t->k.size() > 1;
  return false;
}

std::string CrossSectionModel::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Isotropic& m) { os << "isotropic sigma0=" << m.sigma0; },
                 [&](const GaussianForward& m) {
                   os << "gaussian_forward sigma0=" << m.sigma0
                      << " theta0=" << m.theta0;
                 },
                 [&](const Tabulated& t) {
                   os << "tabulated " << t.k.size() << "x" << t.theta.size();
                 }},
             kind_);
  return os.str();
}

double CrossSectionModel::evaluate(double k, double theta) const {
  double v = std::visit(
      overloaded{[&](const Isotropic& m) { return m.sigma0 / surface_area(d_); },
                 [&](const GaussianForward& m) {
                   double x = theta / m.theta0;
                   return gauss_norm_ * std::exp(-0.5 * x * x);
                 },
                 [&](const Tabulated& t) { return table_value(t, k, theta); }},
      kind_);
  if (!(v >= 0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "cross section invalid at k=" << k << " theta=" << theta
       << ": value " << v;
    throw ModelError(os.str());
  }
  return v;
}

AngularQuadrature CrossSectionModel::quadrature(int order) const {
  return polar_quadrature(SpaceDim(d_), order, breaks_);
}

CrossSectionMoments CrossSectionModel::adaptive_moments(double k) const {
  auto close = [&](double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0 || std::abs(a - b) <= adapt_.rtol * scale;
  };
  int order = adapt_.start;
  CrossSectionMoments prev = compute_moments(*this, k, quadrature(order));
  while (order < adapt_.max) {
    order *= 2;
    CrossSectionMoments next = compute_moments(*this, k, quadrature(order));
    bool ok = close(prev.sigma_total, next.sigma_total) &&
              close(prev.sigma_tr, next.sigma_tr) &&
              close(prev.sigma_qpar, next.sigma_qpar) &&
              close(prev.sigma_qperp, next.sigma_qperp);
    prev = next;
    if (ok) break;
  }
  prev.order = order;
  return prev;
}

CrossSectionMoments CrossSectionModel::moments(double k) const {
  if (fixed_) {
    CrossSectionMoments m = *fixed_;
    m.k = k;
    return m;
  }
  if (!per_k_.empty()) {
    // dsigma is linear in k between table rows, so the moments are too
    const auto& grid = std::get<Tabulated>(kind_).k;
    auto [i, t] = locate(grid, k);
    if (grid.size() == 1) {
      CrossSectionMoments m = per_k_[0];
      m.k = k;
      return m;
    }
    const auto& a = per_k_[i];
    const auto& b = per_k_[i + 1];
    CrossSectionMoments m;
    m.k = k;
    m.sigma_total = (1 - t) * a.sigma_total + t * b.sigma_total;
    m.sigma_tr = (1 - t) * a.sigma_tr + t * b.sigma_tr;
    m.sigma_qpar = (1 - t) * a.sigma_qpar + t * b.sigma_qpar;
    m.sigma_qperp = (1 - t) * a.sigma_qperp + t * b.sigma_qperp;
    m.order = std::max(a.order, b.order);
    return m;
  }
  return adaptive_moments(k);
}

CrossSectionMoments compute_moments(const CrossSectionModel& model, double k,
                                    const AngularQuadrature& quad) {
  if (!(k > 0)) throw DomainError("cross-section moments need k > 0");
  CrossSectionMoments m;
  m.k = k;
  m.order = quad.order;
  for (const auto& n : quad.nodes) {
    const double f = model.evaluate(k, n.theta) * n.solid_angle;
    const double h = std::sin(0.5 * n.theta);
    const double one_minus_c = 2 * h * h;  // avoids cancellation near 0
    const double s = std::sin(n.theta);
    m.sigma_total += f;
    m.sigma_tr += one_minus_c * f;
    m.sigma_qpar += one_minus_c * one_minus_c * f;
    m.sigma_qperp += s * s * f;
  }
  return m;
}

double sigma_total(const CrossSectionModel& model, double k,
                   const AngularQuadrature& quad) {
  return compute_moments(model, k, quad).sigma_total;
}
double sigma_tr(const CrossSectionModel& model, double k,
                const AngularQuadrature& quad) {
  return compute_moments(model, k, quad).sigma_tr;
}
double sigma_qpar(const CrossSectionModel& model, double k,
                  const AngularQuadrature& quad) {
  return compute_moments(model, k, quad).sigma_qpar;
}
double sigma_qperp(const CrossSectionModel& model, double k,
                   const AngularQuadrature& quad) {
  return compute_moments(model, k, quad).sigma_qperp;
}

ForwardEstimates forward_moment_estimates(const CrossSectionModel& model,
                                          double k,
                                          const AngularQuadrature& quad,
                                          double threshold) {
  auto m = compute_moments(model, k, quad);
  if (!(m.sigma_total > 0) || m.sigma_tr / m.sigma_total >= threshold) {
    std::ostringstream os;
    os << "model is not forward peaked: sigma_tr/sigma = "
       << (m.sigma_total > 0 ? m.sigma_tr / m.sigma_total : 0.0)
       << " (threshold " << threshold << ")";
    throw RegimeError(os.str());
  }
  double t2 = 0, t4 = 0;
  for (const auto& n : quad.nodes) {
    const double f = model.evaluate(k, n.theta) * n.solid_angle;
    const double th2 = n.theta * n.theta;
    t2 += th2 * f;
    t4 += th2 * th2 * f;
  }
  t2 /= m.sigma_total;
  t4 /= m.sigma_total;
  ForwardEstimates e;
  e.kurtosis = t4 / (t2 * t2);
  e.sigma_qpar_approx = e.kurtosis * m.sigma_tr * m.sigma_tr / m.sigma_total;
  e.sigma_qperp_approx = 2 * m.sigma_tr;
  return e;
}

TransferReport transfer_integral_checks(const CrossSectionModel& model,
                                        double k,
                                        const AngularQuadrature& quad) {
  const int d = quad.d;
  // oblique reference direction so every component is exercised
  Vec omega0(d);
  for (int i = 0; i < d; ++i) omega0(i) = 1.0 / (i + 1) + 0.1 * i;
  omega0.normalize();
  const Matrix basis = orthonormal_basis(omega0);
  const SphereRule sub = sphere_rule(d - 1, 8, 8);
  const double s_sub = surface_area(d - 1);

  Vec first = Vec::Zero(d);
  double second = 0, str = 0;
  Vec local(d);
  for (const auto& n : quad.nodes) {
    const double f = model.evaluate(k, n.theta) * n.solid_angle / s_sub;
    const double h = std::sin(0.5 * n.theta);
    const double s = std::sin(n.theta);
    str += 2 * h * h * f * s_sub;
    for (Eigen::Index j = 0; j < sub.weights.size(); ++j) {
      local(0) = -2 * h * h;
      local.tail(d - 1) = s * sub.directions.col(j);
      const Vec q = k * (basis * local);
      const double w = f * sub.weights(j);
      first += w * q;
      second += w * q.squaredNorm();
    }
  }
  TransferReport r;
  const double ref1 = k * str, ref2 = 2 * k * k * str;
  r.vector_residual = ref1 > 0 ? (first + ref1 * omega0).norm() / ref1
                               : first.norm();
  r.scalar_residual = ref2 > 0 ? std::abs(second - ref2) / ref2 : second;
  r.max_residual = std::max(r.vector_residual, r.scalar_residual);
  return r;
}

CrossSectionModel CrossSectionModel::load_table(SpaceDim d,
                                                const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open cross-section table " + path, 0);
  return parse_table(d, in, path);
}

CrossSectionModel CrossSectionModel::parse_table(SpaceDim d, std::istream& in,
                                                 const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::map<std::pair<double, double>, double> cells;
  auto trim = [](std::string s) {
    auto a = s.find_first_not_of(" \t\r");
    auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (!header) {
      if (fields != std::vector<std::string>{"k", "theta", "dsdo"})
        throw ParseError(name + ": expected header k,theta,dsdo", lineno);
      header = true;
      continue;
    }
    if (fields.size() != 3)
      throw ParseError(name + ": expected 3 fields", lineno);
    double v[3];
    for (int i = 0; i < 3; ++i) {
      std::size_t pos = 0;
      try {
        v[i] = std::stod(fields[i], &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != fields[i].size())
        throw ParseError(name + ": bad number '" + fields[i] + "'", lineno);
    }
    if (!(v[0] > 0)) throw ParseError(name + ": k must be > 0", lineno);
    if (v[1] < 0 || v[1] > pi + 1e-12)
      throw ParseError(name + ": theta outside [0, pi]", lineno);
    if (!cells.emplace(std::make_pair(v[0], v[1]), v[2]).second)
      throw ParseError(name + ": duplicate (k, theta) entry", lineno);
  }
  if (!header) throw ParseError(name + ": missing header", lineno);
  if (cells.empty()) throw ParseError(name + ": no data rows", lineno);

  Tabulated t;
  for (const auto& [key, val] : cells) {
    if (t.k.empty() || t.k.back() != key.first) t.k.push_back(key.first);
  }
  for (const auto& [key, val] : cells) {
    if (key.first != t.k.front()) break;
    t.theta.push_back(key.second);
  }
  if (cells.size() != t.k.size() * t.theta.size())
    throw ParseError(name + ": table is not a full k x theta grid", 0);
  for (double k : t.k) {
    for (double th : t.theta) {
      auto it = cells.find({k, th});
      if (it == cells.end())
        throw ParseError(name + ": table is not a full k x theta grid", 0);
      t.values.push_back(it->second);
    }
  }
  return CrossSectionModel(d, std::move(t));
}

}  // namespace fastdeco
