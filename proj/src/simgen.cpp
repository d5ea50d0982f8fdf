#include "spsurv/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

#include "spsurv/special.hpp"

namespace spsurv {

TruthBaseline::Value TruthBaseline::eval(double t, bool need_density) const {
  if (kind == Kind::Parametric) {
    const auto c = centering_eval(family, theta1, theta2, t);
    return {c.surv, c.cdf, need_density ? c.log_dens : -kInf};
  }
  if (t <= 0.0) return {1.0, 0.0, -kInf};
  const double lt = std::log(t);
  const double z1 = 2.0 * (lt + 1.0), z2 = 2.0 * (lt - 1.0);
  const double surv = 0.5 * (normal_sf(z1) + normal_sf(z2));
  const double cdf = 0.5 * (normal_cdf(z1) + normal_cdf(z2));
  double ld = -kInf;
  if (need_density) {
    const double l1 = log_normal_pdf(z1), l2 = log_normal_pdf(z2);
    const double hi = std::max(l1, l2);
    // 0.5 * 2 * phi(z) / t for each component.
    ld = hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi)) - lt;
  }
  return {surv, cdf, ld};
}

double sample_survival_time(ModelKind model, double eta, const TruthBaseline& base, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("uniform draw must lie in (0,1)");
  // Compare on whichever tail keeps precision.
  const auto g = [&](double log_t) {
    const auto v = model_eval(model, std::exp(log_t), eta, base, false);
    return u < 0.5 ? v.cdf - u : (1.0 - u) - v.surv;
  };
  double lo = std::log(1e-10), hi = std::log(1e3);
  for (int k = 0; g(lo) > 0.0; ++k) {
    if (k > 60) throw std::runtime_error("survival time bracket failed below");
    hi = lo;
    lo -= std::log(10.0);
  }
  for (int k = 0; g(hi) < 0.0; ++k) {
    if (k > 60) throw std::runtime_error("survival time bracket failed above");
    lo = hi;
    hi += std::log(10.0);
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return std::exp(0.5 * (r.first + r.second));
}

std::vector<CensoredTime> apply_censoring(std::span<const double> times, const CensoringScheme& scheme, Rng& rng) {
  const std::size_t n = times.size();
  std::vector<CensoredTime> out(n);
  if (scheme.kind == CensoringScheme::Kind::None) {
    for (std::size_t i = 0; i < n; ++i) out[i] = {times[i], times[i]};
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  const auto n_right = static_cast<std::size_t>(std::floor(scheme.right_fraction * static_cast<double>(n)));
  std::vector<bool> right(n, false);
  for (std::size_t k = 0; k < n_right; ++k) right[order[k]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = times[i];
    if (right[i]) {
      const double c = rng.uniform(scheme.censor_lo, scheme.censor_hi);
      out[i] = t <= c ? CensoredTime{t, t} : CensoredTime{c, kInf};
      continue;
    }
    const int visits = rng.poisson(scheme.visits_mean) + 1;
    double prev = 0.0, o = 0.0;
    bool placed = false;
    for (int k = 0; k < visits; ++k) {
      o += rng.exponential(scheme.gap_rate);
      if (!placed && t <= o) {
        out[i] = {prev, o};
        placed = true;
      }
      prev = o;
    }
    if (!placed) out[i] = {prev, kInf};
  }
  return out;
}

Eigen::VectorXd gen_frailty_truth(const FrailtySpec& spec, double tau2, double phi, Rng& rng) {
  const int m = spec.m();
  Eigen::VectorXd z(m);
  for (int i = 0; i < m; ++i) z[i] = rng.normal();
  switch (spec.kind) {
    case FrailtyKind::None: return Eigen::VectorXd();
    case FrailtyKind::IID: return std::sqrt(tau2) * z;
    case FrailtyKind::ICAR: {
      // Pseudo-inverse draw: the nugget-regularized draw after centering has this law.
      const Eigen::VectorXd deg = spec.adjacency.rowwise().sum();
      const Eigen::MatrixXd q = Eigen::MatrixXd(deg.asDiagonal()) - spec.adjacency;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
      const double tol = 1e-9 * es.eigenvalues().maxCoeff();
      for (int k = 0; k < m; ++k) {
        const double lam = es.eigenvalues()[k];
        if (lam > tol) v += es.eigenvectors().col(k) * (z[k] / std::sqrt(lam));
      }
      v *= std::sqrt(tau2);
      v.array() -= v.mean();
      return v;
    }
    case FrailtyKind::GRF: {
      Eigen::MatrixXd r = distance_matrix(spec.coords).unaryExpr([&](double d) { return powexp_corr(d, phi, spec.nu); });
      return std::sqrt(tau2) * (robust_cholesky(r) * z);
    }
  }
  return Eigen::VectorXd();
}

CovariateDesign parse_covariate_design(const std::string& name) {
  if (name == "sim1") return CovariateDesign::Sim1;
  if (name == "sim4ex1") return CovariateDesign::Sim4Ex1;
  if (name == "sim4ex2") return CovariateDesign::Sim4Ex2;
  if (name == "sim4ex3") return CovariateDesign::Sim4Ex3;
  throw std::invalid_argument("unknown covariate design: " + name);
}

const char* to_string(CovariateDesign d) {
  switch (d) {
    case CovariateDesign::Sim1: return "sim1";
    case CovariateDesign::Sim4Ex1: return "sim4ex1";
    case CovariateDesign::Sim4Ex2: return "sim4ex2";
    case CovariateDesign::Sim4Ex3: return "sim4ex3";
  }
  return "?";
}

std::vector<std::string> covariate_names(CovariateDesign d) {
  const int p = d == CovariateDesign::Sim1 ? 2 : d == CovariateDesign::Sim4Ex3 ? 10 : 5;
  std::vector<std::string> out;
  for (int j = 1; j <= p; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

Eigen::MatrixXd gen_covariates(CovariateDesign design, int n, Rng& rng) {
  const auto p = static_cast<Eigen::Index>(covariate_names(design).size());
  Eigen::MatrixXd x(n, p);
  for (int i = 0; i < n; ++i) {
    switch (design) {
      case CovariateDesign::Sim1:
        x(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        x(i, 1) = rng.normal();
        break;
      case CovariateDesign::Sim4Ex1:
      case CovariateDesign::Sim4Ex2:
        x(i, 0) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        for (int j = 1; j < 5; ++j) x(i, j) = rng.normal();
        if (design == CovariateDesign::Sim4Ex2) x(i, 2) = x(i, 1) + 0.15 * x(i, 2);
        break;
      case CovariateDesign::Sim4Ex3: {
        const double z = rng.normal();
        for (int j = 0; j < 10; ++j) x(i, j) = z + rng.normal();
        break;
      }
    }
  }
  return x;
}

Eigen::MatrixXd builtin_adjacency37() { return read_adjacency(std::string(SPSURV_DATA_DIR) + "/adjacency37.txt", AdjacencyFormat::EdgeList, 37); }

SimDesign SimDesign::preset(const std::string& name, ModelKind model) {
  SimDesign d;
  d.name = name;
  d.model = model;
  d.beta = Eigen::Vector2d(1.0, 1.0);
  if (name == "sim1") return d;
  if (name == "sim3") {
    d.frailty = FrailtyKind::GRF;
    d.m = 150;
    d.per_location = 5;
    return d;
  }
  if (name == "sim4ex1" || name == "sim4ex2" || name == "sim4ex3") {
    d.covariates = parse_covariate_design(name);
    if (d.covariates == CovariateDesign::Sim4Ex3) {
      d.beta = Eigen::VectorXd::Zero(10);
      d.beta.head(5).setOnes();
    } else {
      d.beta = Eigen::VectorXd::Zero(5);
      d.beta.head(2).setOnes();
    }
    return d;
  }
  if (name == "parametric") {
    // Log-logistic baseline with median 1 and shape 2, no frailty.
    d.baseline = TruthBaseline::parametric(CenteringFamily::LogLogistic, 0.0, std::log(2.0));
    d.frailty = FrailtyKind::None;
    d.m = 1;
    d.per_location = 500;
    return d;
  }
  throw std::invalid_argument("unknown simulation design: " + name);
}

SimulatedData simulate(const SimDesign& design, std::uint64_t seed) {
  Rng rng_frailty = Rng::stream(seed, 1), rng_x = Rng::stream(seed, 2), rng_u = Rng::stream(seed, 3),
      rng_cens = Rng::stream(seed, 4), rng_sites = Rng::stream(seed, 5);
  SimulatedData out;
  const int m = design.frailty == FrailtyKind::None ? 1 : design.m;
  const int n = m * design.per_location;
  Eigen::MatrixX2d coords;
  switch (design.frailty) {
    case FrailtyKind::None: out.frailty = FrailtySpec::none(); break;
    case FrailtyKind::IID: out.frailty = FrailtySpec::iid(m); break;
    case FrailtyKind::ICAR:
      if (m != 37) throw std::invalid_argument("the bundled ICAR map has 37 regions");
      out.frailty = FrailtySpec::icar(builtin_adjacency37());
      break;
    case FrailtyKind::GRF:
      coords.resize(m, 2);
      for (int i = 0; i < m; ++i) coords(i, 0) = rng_sites.uniform(0.0, design.region), coords(i, 1) = rng_sites.uniform(0.0, design.region);
      out.frailty = FrailtySpec::grf(coords, design.nu);
      break;
  }
  out.v = design.frailty == FrailtyKind::None ? Eigen::VectorXd::Zero(1)
                                              : gen_frailty_truth(out.frailty, design.tau2, design.phi, rng_frailty);
  const Eigen::MatrixXd x = gen_covariates(design.covariates, n, rng_x);
  if (x.cols() != design.beta.size()) throw std::invalid_argument("beta length does not match the covariate design");
  out.true_times.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double eta = x.row(i).dot(design.beta) + out.v[i / design.per_location];
    out.true_times[static_cast<std::size_t>(i)] = sample_survival_time(design.model, eta, design.baseline, rng_u.uniform());
  }
  const auto cens = apply_censoring(out.true_times, design.censoring, rng_cens);
  std::vector<CensoredObservation> obs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& o = obs[static_cast<std::size_t>(i)];
    o.a = cens[static_cast<std::size_t>(i)].a;
    o.b = cens[static_cast<std::size_t>(i)].b;
    o.x = std::vector<double>(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) o.x[static_cast<std::size_t>(j)] = x(i, j);
    o.location = i / design.per_location;
  }
  out.data = Dataset(std::move(obs), m, covariate_names(design.covariates));
  if (design.frailty == FrailtyKind::GRF) out.data.coords = coords;
  return out;
}

}  // namespace spsurv
