#include "spsurv/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "spsurv/kernels.hpp"
#include "spsurv/log.hpp"
#include "spsurv/special.hpp"

namespace spsurv {

// ---------------------------------------------------------------- proposals

AdaptiveProposal::AdaptiveProposal(Eigen::MatrixXd sigma0, long l0) : sigma0_(std::move(sigma0)), l0_(l0) {
  chol0_ = robust_cholesky(sigma0_);
  mean_ = Eigen::VectorXd::Zero(sigma0_.rows());
  scatter_ = Eigen::MatrixXd::Zero(sigma0_.rows(), sigma0_.cols());
}

Eigen::MatrixXd AdaptiveProposal::covariance() const {
  // Iteration l = count_ + 1 uses the sample covariance of the count_ states so far.
  if (count_ + 1 <= l0_ || count_ < 2) return sigma0_;
  const double d = static_cast<double>(dim());
  Eigen::MatrixXd c = scatter_ / static_cast<double>(count_ - 1);
  c.diagonal().array() += 1e-10;
  return (2.4 * 2.4 / d) * c;
}

Eigen::VectorXd AdaptiveProposal::propose(const Eigen::VectorXd& current, Rng& rng) const {
  if (count_ + 1 <= l0_ || count_ < 2) return rng.mvnormal(current, chol0_);
  if (chol_count_ != count_) {
    chol_cache_ = robust_cholesky(covariance());
    chol_count_ = count_;
  }
  return rng.mvnormal(current, chol_cache_);
}

void AdaptiveProposal::record(const Eigen::VectorXd& state) {
  ++count_;
  const Eigen::VectorXd delta = state - mean_;
  mean_ += delta / static_cast<double>(count_);
  scatter_.noalias() += delta * (state - mean_).transpose();
}

// ---------------------------------------------------------------- layout

ParameterLayout ParameterLayout::make(int p, bool selection, int nxi, int J, FrailtyKind frailty, int m) {
  ParameterLayout l;
  l.p = p;
  l.selection = selection;
  l.nxi = nxi;
  l.J = J;
  l.has_frailty = frailty != FrailtyKind::None;
  l.has_tau2 = l.has_frailty;
  l.has_phi = frailty == FrailtyKind::GRF;
  l.m = l.has_frailty ? m : 0;
  int at = 0;
  l.beta = at, at += p;
  l.gamma = at, at += selection ? p : 0;
  l.xi = at, at += nxi;
  l.theta = at, at += 2;
  l.z = at, at += J - 1;
  l.alpha = at, at += 1;
  l.v = at, at += l.m;
  l.tau2 = at, at += l.has_tau2 ? 1 : 0;
  l.phi = at, at += l.has_phi ? 1 : 0;
  l.width = at;
  return l;
}

std::vector<std::string> ParameterLayout::names(const std::vector<std::string>& covariates,
                                                const std::vector<std::string>& spline_names) const {
  std::vector<std::string> out;
  for (int j = 0; j < p; ++j) out.push_back("beta[" + covariates[static_cast<std::size_t>(j)] + "]");
  if (selection)
    for (int j = 0; j < p; ++j) out.push_back("gamma[" + covariates[static_cast<std::size_t>(j)] + "]");
  for (int k = 0; k < nxi; ++k) out.push_back(spline_names[static_cast<std::size_t>(k)]);
  out.push_back("theta[1]");
  out.push_back("theta[2]");
  for (int j = 1; j < J; ++j) out.push_back("z[" + std::to_string(j) + "]");
  out.push_back("alpha");
  for (int i = 1; i <= m; ++i) out.push_back("v[" + std::to_string(i) + "]");
  if (has_tau2) out.push_back("tau2");
  if (has_phi) out.push_back("phi");
  return out;
}

Eigen::VectorXd ChainState::pack(const ParameterLayout& l) const {
  Eigen::VectorXd row(l.width);
  row.segment(l.beta, l.p) = beta;
  if (l.selection) row.segment(l.gamma, l.p) = gamma;
  row.segment(l.xi, l.nxi) = xi;
  row.segment(l.theta, 2) = theta;
  row.segment(l.z, l.J - 1) = z;
  row[l.alpha] = alpha;
  row.segment(l.v, l.m) = v;
  if (l.has_tau2) row[l.tau2] = tau2;
  if (l.has_phi) row[l.phi] = phi;
  return row;
}

ChainState ChainState::unpack(const ParameterLayout& l, const Eigen::VectorXd& row) {
  ChainState s;
  s.beta = row.segment(l.beta, l.p);
  s.gamma = l.selection ? Eigen::VectorXd(row.segment(l.gamma, l.p)) : Eigen::VectorXd();
  s.xi = row.segment(l.xi, l.nxi);
  s.theta = row.segment(l.theta, 2);
  s.z = row.segment(l.z, l.J - 1);
  s.alpha = row[l.alpha];
  s.v = row.segment(l.v, l.m);
  if (l.has_tau2) s.tau2 = row[l.tau2];
  if (l.has_phi) s.phi = row[l.phi];
  return s;
}

// ---------------------------------------------------------------- context

ModelContext::ModelContext(const Dataset& data, ModelKind model, CenteringFamily family, int J,
                           std::vector<int> nonlinear, int spline_K)
    : data_(&data), model_(model), family_(family), J_(J) {
  if (J < 1) throw std::invalid_argument("Bernstein degree J must be positive");
  const auto n = static_cast<Eigen::Index>(data.n());
  int total = 0;
  for (int col : nonlinear) {
    if (col < 0 || col >= data.p()) throw std::invalid_argument("nonlinear covariate index out of range");
    std::vector<double> values(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = data.design()(i, col);
    splines_.push_back(build_basis(values, spline_K, col));
    total += spline_K;
  }
  spline_design_.resize(n, total);
  int at = 0;
  for (const auto& t : splines_) {
    spline_design_.middleCols(at, t.K) = t.design;
    at += t.K;
  }
}

std::vector<std::string> ModelContext::spline_names() const {
  std::vector<std::string> out;
  for (const auto& t : splines_)
    for (int k = 1; k <= t.K; ++k)
      out.push_back("xi[" + data_->covariate_names()[static_cast<std::size_t>(t.covariate)] + "," + std::to_string(k) + "]");
  return out;
}

TbpBaseline ModelContext::baseline(const Eigen::VectorXd& z, const Eigen::Vector2d& theta) const {
  return TbpBaseline::from_logits(family_, theta[0], theta[1], std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

void ModelContext::fixed_predictor(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, std::span<double> out) const {
  Eigen::VectorXd offset;
  if (spline_design_.cols() > 0) offset = spline_design_ * xi;
  linear_predictor(*data_, beta_eff, offset, Eigen::VectorXd(), out);
}

void ModelContext::predictor(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, const Eigen::VectorXd& v,
                             std::span<double> out) const {
  fixed_predictor(beta_eff, xi, out);
  if (v.size() > 0) {
    const auto& obs = data_->observations();
    for (std::size_t i = 0; i < obs.size(); ++i) out[i] += v[obs[i].location];
  }
}

double ModelContext::loglik(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, const Eigen::VectorXd& v,
                            const TbpBaseline& base, std::span<double> per_obs, bool parallel) const {
  std::vector<double> eta(data_->n());
  predictor(beta_eff, xi, v, eta);
  return parallel ? loglik_parallel(model_, *data_, eta, base, per_obs) : loglik_serial(model_, *data_, eta, base, per_obs);
}

// ---------------------------------------------------------------- priors

namespace {

Eigen::MatrixXd g_prior(const Eigen::MatrixXd& xc, double g, bool& ridged) {
  const double n = static_cast<double>(xc.rows());
  Eigen::MatrixXd xtx = xc.transpose() * xc;
  Eigen::LLT<Eigen::MatrixXd> llt(xtx);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    warn("centered design X'X is numerically singular; adding a ridge to the g-prior");
    xtx.diagonal().array() += 1e-8 * std::max(xtx.diagonal().maxCoeff(), 1.0);
    llt.compute(xtx);
    ridged = true;
  }
  return g * n * llt.solve(Eigen::MatrixXd::Identity(xc.cols(), xc.cols()));
}

struct CrudeTheta {
  Eigen::Vector2d theta;
};

// Moment-matches the centering family to log times (interval midpoints).
Eigen::Vector2d crude_theta(const Dataset& data, CenteringFamily family) {
  std::vector<double> lt;
  for (const auto& o : data.observations()) {
    double t;
    switch (o.kind()) {
      case CensoringKind::Exact:
      case CensoringKind::Right: t = o.a; break;
      case CensoringKind::Left: t = 0.5 * (o.u + o.b); break;
      default: t = 0.5 * (o.a + o.b); break;
    }
    if (t > 0.0 && std::isfinite(t)) lt.push_back(std::log(t));
  }
  double mu = 0.0, sd = 1.0;
  if (!lt.empty()) {
    for (double x : lt) mu += x;
    mu /= static_cast<double>(lt.size());
    if (lt.size() > 1) {
      double ss = 0.0;
      for (double x : lt) ss += (x - mu) * (x - mu);
      sd = std::max(std::sqrt(ss / static_cast<double>(lt.size() - 1)), 1e-3);
    }
  }
  double std_sd = 1.0, std_mean = 0.0;
  switch (family) {
    case CenteringFamily::LogLogistic: std_sd = std::numbers::pi / std::sqrt(3.0); break;
    case CenteringFamily::LogNormal: std_sd = 1.0; break;
    case CenteringFamily::Weibull:
      std_sd = std::numbers::pi / std::sqrt(6.0);
      std_mean = -std::numbers::egamma;
      break;
  }
  const double theta2 = std::log(std_sd / sd);
  return {-mu + std_mean * std::exp(-theta2), theta2};
}

Eigen::VectorXd column_variances(const Eigen::MatrixXd& a) {
  Eigen::VectorXd out(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double m = a.col(j).mean();
    const double v = a.rows() > 1 ? (a.col(j).array() - m).square().sum() / static_cast<double>(a.rows() - 1) : 1.0;
    out[j] = v > 1e-12 ? v : 1.0;
  }
  return out;
}

Eigen::MatrixXd sample_cov(const std::vector<Eigen::VectorXd>& xs, Eigen::VectorXd& mean) {
  const auto d = xs.empty() ? 0 : xs.front().size();
  mean = Eigen::VectorXd::Zero(d);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(std::max<std::size_t>(xs.size(), 1));
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : xs) c.noalias() += (x - mean) * (x - mean).transpose();
  if (xs.size() > 1) c /= static_cast<double>(xs.size() - 1);
  return c;
}

inline bool accept(double log_ratio, Rng& rng) { return log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio; }

enum Stream { kZ, kTheta, kBeta, kAlpha, kFrailty, kTau, kPhi, kGamma };

}  // namespace

ResolvedPriors resolve_priors(const ModelContext& ctx, const McmcConfig& config) {
  const Dataset& data = ctx.data();
  const int p = data.p();
  const int nb = p + ctx.nxi();
  ResolvedPriors r;
  r.beta0 = Eigen::VectorXd::Zero(nb);
  if (config.hyper.beta0) {
    if (config.hyper.beta0->size() != p) throw std::invalid_argument("beta0 has the wrong length");
    r.beta0.head(p) = *config.hyper.beta0;
  }
  r.W0 = Eigen::MatrixXd::Zero(nb, nb);
  if (p > 0) {
    r.g = default_g(p, config.hyper.M, config.hyper.q);
    if (config.hyper.W0) {
      if (config.hyper.W0->rows() != p || config.hyper.W0->cols() != p) throw std::invalid_argument("W0 has the wrong shape");
      r.W0.topLeftCorner(p, p) = *config.hyper.W0;
    } else if (config.selection) {
      if (data.n() < 2) throw std::invalid_argument("the g-prior needs data");
      r.W0.topLeftCorner(p, p) = g_prior(data.centered_design(), r.g, r.ridge_added);
    } else {
      r.W0.topLeftCorner(p, p) = 1e10 * Eigen::MatrixXd::Identity(p, p);
    }
  }
  int at = p;
  for (const auto& t : ctx.splines()) {
    r.W0.block(at, at, t.K, t.K) = spline_prior_covariance(t);
    at += t.K;
  }
  if (config.frailty.kind == FrailtyKind::GRF) {
    r.phi0 = solve_phi0(max_pairwise_distance(config.frailty.coords), config.frailty.nu);
    r.b_phi = config.hyper.b_phi.value_or((config.hyper.a_phi - 1.0) / r.phi0);
  }
  if (config.hyper.theta0) r.theta0 = *config.hyper.theta0;
  if (config.hyper.V0) r.V0 = *config.hyper.V0;
  return r;
}

// ---------------------------------------------------------------- sampler

Sampler::Sampler(const Dataset& data, McmcConfig config)
    : data_(&data),
      config_(std::move(config)),
      ctx_(data, config_.model, config_.family, config_.hyper.J, config_.nonlinear, config_.spline_K) {
  const auto& fr = config_.frailty;
  if (fr.kind != FrailtyKind::None && fr.m() != data.m())
    throw std::invalid_argument("frailty structure has " + std::to_string(fr.m()) + " locations but the data have " +
                                std::to_string(data.m()));
  if (config_.nsave < 0 || config_.nburn < 0 || config_.nskip < 0) throw std::invalid_argument("negative MCMC lengths");
  layout_ = ParameterLayout::make(data.p(), config_.selection, ctx_.nxi(), config_.hyper.J, fr.kind, data.m());
  for (int k = 0; k < 8; ++k) rng_[static_cast<std::size_t>(k)] = Rng::stream(config_.seed, static_cast<std::uint64_t>(k + 1));
  if (fr.kind == FrailtyKind::GRF && fr.fsa) fsa_layout_ = make_fsa_layout(fr.coords, *fr.fsa);
  const std::size_t n = data.n();
  eta_fixed_.assign(n, 0.0);
  eta_.assign(n, 0.0);
  per_obs_.assign(n, 0.0);
  scratch_.assign(n, 0.0);
}

double Sampler::fresh_loglik(const ChainState& s, std::vector<double>& per_obs) const {
  const TbpBaseline base = pinned_weights_ ? TbpBaseline::centered(config_.family, s.theta[0], s.theta[1], config_.hyper.J)
                                           : ctx_.baseline(s.z, s.theta);
  return ctx_.loglik(s.beta_eff(), s.xi, s.v, base, per_obs, config_.parallel);
}

void Sampler::refresh_cache() {
  base_ = pinned_weights_ ? TbpBaseline::centered(config_.family, state_.theta[0], state_.theta[1], config_.hyper.J)
                          : ctx_.baseline(state_.z, state_.theta);
  ctx_.fixed_predictor(state_.beta_eff(), state_.xi, eta_fixed_);
  const auto& obs = data_->observations();
  for (std::size_t i = 0; i < obs.size(); ++i) eta_[i] = eta_fixed_[i] + (state_.v.size() ? state_.v[obs[i].location] : 0.0);
  total_ = config_.parallel ? loglik_parallel(config_.model, *data_, eta_, base_, per_obs_)
                            : loglik_serial(config_.model, *data_, eta_, base_, per_obs_);
}

void Sampler::verify_cache() const {
  std::vector<double> fresh(data_->n());
  const double f = fresh_loglik(state_, fresh);
  const bool both_inf = std::isinf(f) && std::isinf(total_) && (f < 0) == (total_ < 0);
  if (!both_inf && !(std::abs(f - total_) <= 1e-10))
    throw std::logic_error("cached log-likelihood " + std::to_string(total_) + " differs from fresh value " + std::to_string(f));
}

double Sampler::beta_log_prior(const Eigen::VectorXd& coef) const {
  if (coef.size() == 0) return 0.0;
  const Eigen::VectorXd d = coef - priors_.beta0;
  return -0.5 * d.dot(w0_llt_.solve(d));
}

double Sampler::theta_log_prior(const Eigen::Vector2d& theta) const {
  const Eigen::Vector2d d = theta - priors_.theta0;
  return -0.5 * d.dot(v0_inv_ * d);
}

double Sampler::phi_log_target(const PrecisionStructure& s, double phi) const {
  return -0.5 * s.log_det_corr() - s.quad_form(state_.v) / (2.0 * state_.tau2) + (config_.hyper.a_phi - 1.0) * std::log(phi) -
         priors_.b_phi * phi;
}

void Sampler::set_state(const ChainState& s) {
  state_ = s;
  if (config_.frailty.kind != FrailtyKind::None)
    structure_ = build_structure(config_.frailty, state_.phi, fsa_layout_ ? &*fsa_layout_ : nullptr);
  refresh_cache();
}

bool Sampler::update_z() {
  if (pinned_weights_ || layout_.J < 2) return false;
  auto& st = stat("z");
  const Eigen::VectorXd prop = prop_z_.propose(state_.z, rng_[kZ]);
  ++st.proposed;
  const TbpBaseline cand = ctx_.baseline(prop, state_.theta);
  const double ll = config_.parallel ? loglik_parallel(config_.model, *data_, eta_, cand, scratch_)
                                     : loglik_serial(config_.model, *data_, eta_, cand, scratch_);
  bool ok = false;
  if (!std::isfinite(ll)) {
    ++st.nonfinite;
  } else {
    const double lr = ll + tbp_log_prior({prop.data(), static_cast<std::size_t>(prop.size())}, state_.alpha) - total_ -
                      tbp_log_prior({state_.z.data(), static_cast<std::size_t>(state_.z.size())}, state_.alpha);
    if (accept(lr, rng_[kZ])) {
      ok = true;
      ++st.accepted;
      state_.z = prop;
      base_ = cand;
      std::swap(per_obs_, scratch_);
      total_ = ll;
    }
  }
  prop_z_.record(state_.z);
  return ok;
}

bool Sampler::update_theta() {
  auto& st = stat("theta");
  const Eigen::Vector2d prop = prop_theta_.propose(state_.theta, rng_[kTheta]);
  ++st.proposed;
  const TbpBaseline cand = pinned_weights_ ? TbpBaseline::centered(config_.family, prop[0], prop[1], config_.hyper.J)
                                           : ctx_.baseline(state_.z, prop);
  const double ll = config_.parallel ? loglik_parallel(config_.model, *data_, eta_, cand, scratch_)
                                     : loglik_serial(config_.model, *data_, eta_, cand, scratch_);
  bool ok = false;
  if (!std::isfinite(ll)) {
    ++st.nonfinite;
  } else {
    const double lr = ll + theta_log_prior(prop) - total_ - theta_log_prior(state_.theta);
    if (accept(lr, rng_[kTheta])) {
      ok = true;
      ++st.accepted;
      state_.theta = prop;
      base_ = cand;
      std::swap(per_obs_, scratch_);
      total_ = ll;
    }
  }
  prop_theta_.record(state_.theta);
  return ok;
}

bool Sampler::update_beta() {
  const int p = layout_.p, nxi = layout_.nxi;
  if (p + nxi == 0) return false;
  auto& st = stat("beta");
  Eigen::VectorXd cur(p + nxi);
  cur << state_.beta, state_.xi;
  const Eigen::VectorXd prop = prop_beta_.propose(cur, rng_[kBeta]);
  ++st.proposed;
  const Eigen::VectorXd b = prop.head(p);
  const Eigen::VectorXd xi = prop.tail(nxi);
  const Eigen::VectorXd beff = state_.gamma.size() ? Eigen::VectorXd(state_.gamma.cwiseProduct(b)) : b;
  std::vector<double> fixed(data_->n()), eta(data_->n());
  ctx_.fixed_predictor(beff, xi, fixed);
  const auto& obs = data_->observations();
  for (std::size_t i = 0; i < obs.size(); ++i) eta[i] = fixed[i] + (state_.v.size() ? state_.v[obs[i].location] : 0.0);
  const double ll = config_.parallel ? loglik_parallel(config_.model, *data_, eta, base_, scratch_)
                                     : loglik_serial(config_.model, *data_, eta, base_, scratch_);
  bool ok = false;
  if (!std::isfinite(ll)) {
    ++st.nonfinite;
  } else {
    const double lr = ll + beta_log_prior(prop) - total_ - beta_log_prior(cur);
    if (accept(lr, rng_[kBeta])) {
      ok = true;
      ++st.accepted;
      state_.beta = b;
      state_.xi = xi;
      eta_fixed_ = std::move(fixed);
      eta_ = std::move(eta);
      std::swap(per_obs_, scratch_);
      total_ = ll;
      cur = prop;
    }
  }
  prop_beta_.record(cur);
  return ok;
}

bool Sampler::update_alpha() {
  if (pinned_weights_) return false;
  auto& st = stat("alpha");
  const double J = layout_.J;
  const auto w = weights_from_logits({state_.z.data(), static_cast<std::size_t>(state_.z.size())});
  double sum_log_w = 0.0;
  for (double x : w) sum_log_w += std::log(x);
  const auto target = [&](double a) {
    return std::lgamma(a * J) - J * std::lgamma(a) + (a - 1.0) * sum_log_w + (config_.hyper.a_alpha - 1.0) * std::log(a) -
           config_.hyper.b_alpha * a;
  };
  Eigen::VectorXd cur(1);
  cur[0] = state_.alpha;
  const double prop = prop_alpha_.propose(cur, rng_[kAlpha])[0];
  ++st.proposed;
  bool ok = false;
  if (prop > 0.0) {
    const double lr = target(prop) - target(state_.alpha);
    if (!std::isfinite(lr)) {
      ++st.nonfinite;
    } else if (accept(lr, rng_[kAlpha])) {
      ok = true;
      ++st.accepted;
      state_.alpha = prop;
    }
  }
  cur[0] = state_.alpha;
  prop_alpha_.record(cur);
  return ok;
}

void Sampler::update_frailties() {
  if (config_.frailty.kind == FrailtyKind::None) return;
  auto& st = stat("v");
  const auto& groups = data_->by_location();
  const auto& obs = data_->observations();
  Rng& rng = rng_[kFrailty];
  std::vector<double> eta_try;
  for (int i = 0; i < layout_.m; ++i) {
    auto& sti = stats_["v[" + std::to_string(i + 1) + "]"];
    const auto cond = structure_.conditional(i, state_.v, state_.tau2);
    const double vi = state_.v[i];
    const double prop = vi + std::sqrt(cond.variance) * rng.normal();
    ++st.proposed;
    ++sti.proposed;
    const auto& rows = groups[static_cast<std::size_t>(i)];
    double ll_old = 0.0, ll_new = 0.0;
    eta_try.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = static_cast<std::size_t>(rows[k]);
      eta_try[k] = eta_fixed_[r] + prop;
      scratch_[r] = obs_loglik(config_.model, obs[r], eta_try[k], base_);
      ll_old += per_obs_[r];
      ll_new += scratch_[r];
    }
    if (!std::isfinite(ll_new)) {
      ++st.nonfinite;
      ++sti.nonfinite;
      continue;
    }
    const double lp_new = -0.5 * (prop - cond.mean) * (prop - cond.mean) / cond.variance;
    const double lp_old = -0.5 * (vi - cond.mean) * (vi - cond.mean) / cond.variance;
    if (accept(ll_new + lp_new - ll_old - lp_old, rng)) {
      ++st.accepted;
      ++sti.accepted;
      state_.v[i] = prop;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto r = static_cast<std::size_t>(rows[k]);
        eta_[r] = eta_try[k];
        per_obs_[r] = scratch_[r];
      }
    }
  }
  if (config_.frailty.kind == FrailtyKind::ICAR) {
    state_.v.array() -= state_.v.mean();
    refresh_cache();
  } else {
    total_ = pairwise_sum(per_obs_);
  }
}

void Sampler::update_tau2() {
  if (config_.frailty.kind == FrailtyKind::None) return;
  const double shape = config_.hyper.a_tau + 0.5 * structure_.rank();
  const double rate = config_.hyper.b_tau + 0.5 * structure_.quad_form(state_.v);
  state_.tau2 = 1.0 / rng_[kTau].gamma(shape, rate);
  ++stat("tau2").proposed;
  ++stat("tau2").accepted;
}

bool Sampler::update_phi() {
  if (config_.frailty.kind != FrailtyKind::GRF) return false;
  auto& st = stat("phi");
  Eigen::VectorXd cur(1);
  cur[0] = state_.phi;
  const double prop = prop_phi_.propose(cur, rng_[kPhi])[0];
  ++st.proposed;
  bool ok = false;
  if (prop > 0.0) {
    try {
      PrecisionStructure cand = build_structure(config_.frailty, prop, fsa_layout_ ? &*fsa_layout_ : nullptr);
      const double lr = phi_log_target(cand, prop) - phi_log_target(structure_, state_.phi);
      if (!std::isfinite(lr)) {
        ++st.nonfinite;
      } else if (accept(lr, rng_[kPhi])) {
        ok = true;
        ++st.accepted;
        state_.phi = prop;
        structure_ = std::move(cand);
      }
    } catch (const std::runtime_error&) {
      ++st.nonfinite;
    }
  }
  cur[0] = state_.phi;
  prop_phi_.record(cur);
  return ok;
}

void Sampler::update_gamma() {
  if (!config_.selection || pinned_weights_) return;
  auto& st = stat("gamma");
  const double log_prior_odds = std::log(config_.hyper.inclusion) - std::log1p(-config_.hyper.inclusion);
  const auto& obs = data_->observations();
  std::vector<double> fixed(data_->n()), eta(data_->n());
  for (int j = 0; j < layout_.p; ++j) {
    Eigen::VectorXd g = state_.gamma;
    g[j] = 1.0 - g[j];
    ctx_.fixed_predictor(g.cwiseProduct(state_.beta), state_.xi, fixed);
    for (std::size_t i = 0; i < obs.size(); ++i) eta[i] = fixed[i] + (state_.v.size() ? state_.v[obs[i].location] : 0.0);
    const double ll_flip = config_.parallel ? loglik_parallel(config_.model, *data_, eta, base_, scratch_)
                                            : loglik_serial(config_.model, *data_, eta, base_, scratch_);
    const double ll1 = state_.gamma[j] == 1.0 ? total_ : ll_flip;
    const double ll0 = state_.gamma[j] == 1.0 ? ll_flip : total_;
    if (std::isnan(ll_flip)) ++st.nonfinite;
    const double log_odds = log_prior_odds + ll1 - ll0;
    const double p1 = std::isnan(log_odds) ? (state_.gamma[j] == 1.0 ? 1.0 : 0.0) : 1.0 / (1.0 + std::exp(-log_odds));
    const double draw = rng_[kGamma].bernoulli(p1) ? 1.0 : 0.0;
    ++st.proposed;
    if (draw != state_.gamma[j]) {
      ++st.accepted;
      state_.gamma = g;
      std::swap(eta_fixed_, fixed);
      std::swap(eta_, eta);
      std::swap(per_obs_, scratch_);
      total_ = ll_flip;
    }
  }
}

void Sampler::sweep() {
  const auto& u = config_.updates;
  if (u.z) update_z();
  if (u.theta) update_theta();
  if (u.beta) update_beta();
  if (u.alpha) update_alpha();
  if (u.frailty) update_frailties();
  if (u.tau2) update_tau2();
  if (u.phi) update_phi();
  if (u.gamma) update_gamma();
  if (config_.verify_cache) verify_cache();
}

double Sampler::log_joint() const {
  double lp = total_;
  Eigen::VectorXd coef(layout_.p + layout_.nxi);
  coef << state_.beta, state_.xi;
  lp += beta_log_prior(coef) + theta_log_prior(state_.theta);
  lp += tbp_log_prior({state_.z.data(), static_cast<std::size_t>(state_.z.size())}, state_.alpha);
  lp += (config_.hyper.a_alpha - 1.0) * std::log(state_.alpha) - config_.hyper.b_alpha * state_.alpha;
  if (config_.frailty.kind != FrailtyKind::None) {
    const double prec = 1.0 / state_.tau2;
    lp += 0.5 * structure_.rank() * std::log(prec) - 0.5 * prec * structure_.quad_form(state_.v);
    lp += (config_.hyper.a_tau - 1.0) * std::log(prec) - config_.hyper.b_tau * prec;
    if (config_.frailty.kind == FrailtyKind::GRF)
      lp += -0.5 * structure_.log_det_corr() + (config_.hyper.a_phi - 1.0) * std::log(state_.phi) - priors_.b_phi * state_.phi;
  }
  if (config_.selection)
    for (int j = 0; j < layout_.p; ++j)
      lp += state_.gamma[j] == 1.0 ? std::log(config_.hyper.inclusion) : std::log1p(-config_.hyper.inclusion);
  return lp;
}

PrerunResult Sampler::parametric_prerun() {
  if (data_->n() == 0) throw std::invalid_argument("parametric prerun needs at least one observation");
  const int p = layout_.p, nxi = layout_.nxi, nb = p + nxi;
  const double n = static_cast<double>(data_->n());
  const double shrink = std::max(1.0, n / 100.0);

  // Vague priors for this stage only.
  const ResolvedPriors saved = priors_;
  priors_ = resolve_priors(ctx_, config_);
  if (p > 0) priors_.W0.topLeftCorner(p, p) = 1e10 * Eigen::MatrixXd::Identity(p, p);
  const Eigen::Vector2d start = crude_theta(*data_, config_.family);
  priors_.theta0 = start;
  priors_.V0 = 100.0 * Eigen::Matrix2d::Identity();
  if (nb > 0) w0_llt_.compute(priors_.W0);
  v0_inv_ = priors_.V0.inverse();

  ChainState s;
  s.z = Eigen::VectorXd::Zero(layout_.J - 1);
  s.theta = start;
  s.beta = Eigen::VectorXd::Zero(p);
  s.xi = Eigen::VectorXd::Zero(nxi);
  s.v = Eigen::VectorXd::Zero(layout_.m);
  s.tau2 = 1.0;
  s.phi = priors_.phi0;
  pinned_weights_ = true;
  const bool saved_selection = config_.selection;
  config_.selection = false;
  set_state(s);
  if (!std::isfinite(total_)) {
    for (std::size_t i = 0; i < per_obs_.size(); ++i)
      if (!std::isfinite(per_obs_[i]))
        throw std::runtime_error("non-finite log-likelihood at initialization for observation " + std::to_string(i + 1));
  }

  const long l0 = std::min<long>(config_.l0, std::max(config_.prerun_iterations / 4, 2));
  prop_theta_ = AdaptiveProposal(0.01 / shrink * Eigen::MatrixXd::Identity(2, 2), l0);
  if (nb > 0) {
    Eigen::MatrixXd design(data_->n(), nb);
    design << data_->design(), ctx_.spline_design();
    const Eigen::VectorXd var = column_variances(design);
    prop_beta_ = AdaptiveProposal(Eigen::MatrixXd((0.01 / shrink) * var.cwiseInverse().asDiagonal()), l0);
  }
  if (layout_.has_phi) prop_phi_ = AdaptiveProposal(0.16 * Eigen::MatrixXd::Identity(1, 1), l0);

  // The prerun draws from its own streams so the main chain is unaffected by its length.
  auto main_rng = rng_;
  for (int k = 0; k < 8; ++k) rng_[static_cast<std::size_t>(k)] = Rng::stream(config_.seed, static_cast<std::uint64_t>(101 + k));

  std::vector<Eigen::VectorXd> thetas, betas, vs;
  std::vector<double> taus, phis;
  const int iters = std::max(config_.prerun_iterations, 2);
  for (int it = 0; it < iters; ++it) {
    sweep();
    if (it >= iters / 2) {
      thetas.push_back(state_.theta);
      Eigen::VectorXd c(nb);
      c << state_.beta, state_.xi;
      betas.push_back(c);
      vs.push_back(state_.v);
      taus.push_back(state_.tau2);
      phis.push_back(state_.phi);
    }
  }

  PrerunResult r;
  Eigen::VectorXd tm;
  r.V_hat = sample_cov(thetas, tm);
  r.theta_hat = tm;
  if (!(r.V_hat.determinant() > 0.0)) r.V_hat = prop_theta_.initial();
  r.beta_hat = Eigen::VectorXd::Zero(nb);
  r.W_hat = Eigen::MatrixXd::Zero(nb, nb);
  if (nb > 0) {
    r.W_hat = sample_cov(betas, r.beta_hat);
    for (int j = 0; j < nb; ++j)
      if (!(r.W_hat(j, j) > 0.0)) r.W_hat(j, j) = prop_beta_.initial()(j, j);
    r.W_hat.diagonal().array() += 1e-10;
  }
  Eigen::VectorXd vm;
  sample_cov(vs, vm);
  r.v_hat = vm;
  double ts = 0.0, ps = 0.0;
  for (double t : taus) ts += t;
  for (double ph : phis) ps += ph;
  r.tau2_hat = ts / static_cast<double>(taus.size());
  r.phi_hat = ps / static_cast<double>(phis.size());

  rng_ = main_rng;
  pinned_weights_ = false;
  config_.selection = saved_selection;
  priors_ = saved;
  stats_.clear();
  prerun_ = r;
  return r;
}

void Sampler::initialize() {
  priors_ = resolve_priors(ctx_, config_);
  const int p = layout_.p, nxi = layout_.nxi, nb = p + nxi;
  Eigen::Vector2d theta_hat;
  Eigen::Matrix2d V_hat;
  Eigen::MatrixXd W_hat;
  if (config_.prerun) {
    const PrerunResult r = parametric_prerun();
    priors_ = resolve_priors(ctx_, config_);
    theta_hat = r.theta_hat;
    V_hat = r.V_hat;
    W_hat = r.W_hat;
  } else {
    theta_hat = config_.init.theta.value_or(config_.hyper.theta0.value_or(
        data_->n() > 0 ? crude_theta(*data_, config_.family) : Eigen::Vector2d::Zero()));
    V_hat = config_.hyper.V0 ? Eigen::Matrix2d(*config_.hyper.V0 / 10.0) : Eigen::Matrix2d(0.1 * Eigen::Matrix2d::Identity());
    W_hat = Eigen::MatrixXd::Zero(nb, nb);
    for (int j = 0; j < nb; ++j) W_hat(j, j) = std::min(priors_.W0(j, j), 1.0) * 2.4 * 2.4 / nb;
    prerun_.theta_hat = theta_hat;
    prerun_.V_hat = V_hat;
    prerun_.beta_hat = Eigen::VectorXd::Zero(nb);
    prerun_.W_hat = W_hat;
    prerun_.v_hat = Eigen::VectorXd::Zero(layout_.m);
    prerun_.phi_hat = priors_.phi0;
  }
  priors_.theta0 = config_.hyper.theta0.value_or(theta_hat);
  priors_.V0 = config_.hyper.V0.value_or(Eigen::Matrix2d(10.0 * V_hat));
  if (nb > 0) w0_llt_.compute(priors_.W0);
  v0_inv_ = priors_.V0.inverse();

  ChainState s;
  s.z = config_.init.z.value_or(Eigen::VectorXd::Zero(layout_.J - 1));
  s.theta = config_.init.theta.value_or(theta_hat);
  s.beta = config_.init.beta.value_or(Eigen::VectorXd(prerun_.beta_hat.head(p)));
  s.xi = config_.init.xi.value_or(Eigen::VectorXd(prerun_.beta_hat.tail(nxi)));
  if (config_.selection) s.gamma = Eigen::VectorXd::Ones(p);
  s.v = config_.init.v.value_or(prerun_.v_hat.size() == layout_.m ? prerun_.v_hat : Eigen::VectorXd::Zero(layout_.m));
  s.alpha = config_.init.alpha.value_or(1.0);
  s.tau2 = config_.init.tau2.value_or(config_.prerun ? prerun_.tau2_hat : 1.0);
  s.phi = config_.init.phi.value_or(config_.prerun && layout_.has_phi ? prerun_.phi_hat : priors_.phi0);
  if (s.z.size() != layout_.J - 1 || s.beta.size() != p || s.xi.size() != nxi || s.v.size() != layout_.m)
    throw std::invalid_argument("initial values have the wrong dimensions");

  const long l0 = config_.l0;
  if (layout_.J > 1) prop_z_ = AdaptiveProposal(0.16 * Eigen::MatrixXd::Identity(layout_.J - 1, layout_.J - 1), l0);
  prop_theta_ = AdaptiveProposal(V_hat, l0);
  if (nb > 0) prop_beta_ = AdaptiveProposal(W_hat, l0);
  prop_alpha_ = AdaptiveProposal(0.16 * Eigen::MatrixXd::Identity(1, 1), l0);
  if (layout_.has_phi) prop_phi_ = AdaptiveProposal(0.16 * Eigen::MatrixXd::Identity(1, 1), l0);
  stats_.clear();
  set_state(s);
}

PosteriorArchive Sampler::run() {
  initialize();
  PosteriorArchive a;
  a.layout = layout_;
  a.names = layout_.names(data_->covariate_names(), ctx_.spline_names());
  a.seed = config_.seed;
  const long thin = config_.nskip + 1;
  const long total = config_.nburn + static_cast<long>(config_.nsave) * thin;
  a.iterations = total;
  const auto n = static_cast<Eigen::Index>(data_->n());
  a.draws.resize(config_.nsave, layout_.width);
  if (config_.store_loglik) a.loglik.resize(config_.nsave, n);
  a.loglik_total.resize(config_.nsave);
  Eigen::Index saved = 0;
  for (long it = 1; it <= total; ++it) {
    sweep();
    if (it > config_.nburn && (it - config_.nburn) % thin == 0) {
      a.draws.row(saved) = state_.pack(layout_).transpose();
      if (config_.store_loglik)
        for (Eigen::Index i = 0; i < n; ++i) a.loglik(saved, i) = per_obs_[static_cast<std::size_t>(i)];
      a.loglik_total[saved] = total_;
      ++saved;
    }
  }
  if (saved > 0) {
    // Posterior-mean point on the sampling scale; gamma*beta is averaged jointly.
    const Eigen::VectorXd mean = a.draws.colwise().mean();
    ChainState m = ChainState::unpack(layout_, mean);
    Eigen::VectorXd beff = Eigen::VectorXd::Zero(layout_.p);
    for (Eigen::Index l = 0; l < saved; ++l) beff += ChainState::unpack(layout_, a.draws.row(l).transpose()).beta_eff();
    beff /= static_cast<double>(saved);
    std::vector<double> tmp(data_->n());
    a.loglik_at_mean = ctx_.loglik(beff, m.xi, m.v, ctx_.baseline(m.z, m.theta), tmp, config_.parallel);
  }
  a.blocks = stats_;
  a.prerun = prerun_;
  a.priors = priors_;
  return a;
}

PosteriorArchive run_chain(const Dataset& data, const McmcConfig& config) {
  Sampler s(data, config);
  return s.run();
}

}  // namespace spsurv
