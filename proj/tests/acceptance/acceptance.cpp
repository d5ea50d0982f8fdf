// Acceptance suite: one PASS/FAIL line per criterion.
//
// SPSURV_ACCEPT_REPLICATES scales the Monte Carlo replicate count down for
// quick local runs; SPSURV_ACCEPT_ONLY (e.g. "5,6,7") restricts the criteria.
// Neither is set under ctest.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "oracles.hpp"
#include "spsurv/archive.hpp"
#include "spsurv/baseline.hpp"
#include "spsurv/criteria.hpp"
#include "spsurv/diagnostics.hpp"
#include "spsurv/frailty.hpp"
#include "spsurv/kernels.hpp"
#include "spsurv/log.hpp"
#include "spsurv/models.hpp"
#include "spsurv/sampler.hpp"
#include "spsurv/simgen.hpp"
#include "spsurv/study.hpp"
#include "spsurv/summary.hpp"

using namespace spsurv;

namespace {

// Tolerances.
constexpr int kSimReplicates = 50;
constexpr int kSelectionReplicates = 20;
constexpr int kResidualReplicates = 10;
constexpr int kResidualDraws = 10;
constexpr double kBiasTol = 0.05;
constexpr double kCoverLo = 0.88, kCoverHi = 1.00;
constexpr double kTau2BiasTol = 0.15;
constexpr double kS0SupTol = 0.05;
constexpr double kSelectRate = 0.80;
constexpr double kModalProportion = 0.5;
constexpr double kFsaDenseTol = 1e-10;
constexpr double kFsaRelTol = 1e-6;
constexpr double kIdentityTol = 1e-12;
constexpr double kFdTol = 1e-6;
constexpr double kKmTol = 1e-8;
constexpr double kKsTol = 0.05;
constexpr double kGibbsRelTol = 0.01;
constexpr double kSlopeLo = 0.9, kSlopeHi = 1.1;

constexpr ModelKind kModels[] = {ModelKind::AFT, ModelKind::PH, ModelKind::PO};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

int env_int(const char* name, int fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::atoi(v) : fallback;
}

std::set<int> selected_criteria() {
  std::set<int> out;
  const char* v = std::getenv("SPSURV_ACCEPT_ONLY");
  if (!v || !*v) {
    for (int i = 1; i <= 9; ++i) out.insert(i);
    return out;
  }
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.insert(std::stoi(tok));
  return out;
}

McmcConfig study_mcmc() {
  McmcConfig c;
  c.nburn = 2000;
  c.nsave = 3000;
  c.nskip = 0;
  c.prerun_iterations = 2000;
  c.l0 = 1000;
  return c;
}

std::vector<double> s0_grid() {
  std::vector<double> g;
  for (int k = 0; k < 40; ++k) g.push_back(std::exp(std::log(0.1) + (std::log(5.0) - std::log(0.1)) * k / 39.0));
  return g;
}

// ------------------------------------------------------------ Simulation I

struct SimStudy {
  int replicates = 0;
  // truth -> replicate results (fits hold the truth first, then the others when present)
  std::map<ModelKind, std::vector<ReplicateResult>> results;
};

const FitSummary* find_fit(const ReplicateResult& r, ModelKind m) {
  for (const auto& f : r.fits)
    if (f.model == m) return &f;
  return nullptr;
}

SimStudy run_simulation_one(bool need_selection, bool need_residuals) {
  SimStudy s;
  s.replicates = env_int("SPSURV_ACCEPT_REPLICATES", kSimReplicates);
  const int sel = std::min(s.replicates, kSelectionReplicates);
  const auto t0 = std::chrono::steady_clock::now();
  for (ModelKind truth : kModels) {
    StudySpec spec;
    spec.design = "sim1";
    spec.truth = truth;
    spec.mcmc = study_mcmc();
    spec.seed = 20240 + static_cast<std::uint64_t>(truth);
    spec.s0_grid = s0_grid();
    for (int r = 0; r < s.replicates; ++r) {
      spec.fits = {truth};
      if (need_selection && r < sel)
        for (ModelKind m : kModels)
          if (m != truth) spec.fits.push_back(m);
      spec.residual_draws = need_residuals && r < kResidualReplicates ? kResidualDraws : 0;
      s.results[truth].push_back(run_replicate(spec, r));
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cerr << "  sim1 truth " << to_string(truth) << " replicate " << r + 1 << "/" << s.replicates << " (" << fmt(el, 5)
                << " s)\n";
    }
  }
  return s;
}

Outcome criterion_estimation(const SimStudy& s) {
  Outcome o;
  for (ModelKind truth : kModels) {
    const auto& rs = s.results.at(truth);
    const double R = static_cast<double>(rs.size());
    double bias[2] = {0, 0}, cover[2] = {0, 0}, tau = 0;
    for (const auto& r : rs) {
      const FitSummary& f = *find_fit(r, truth);
      for (int j = 0; j < 2; ++j) {
        bias[j] += f.beta_mean[j] - 1.0;
        cover[j] += (f.beta_lower[j] <= 1.0 && 1.0 <= f.beta_upper[j]) ? 1.0 : 0.0;
      }
      tau += f.tau2_median - 1.0;
    }
    for (int j = 0; j < 2; ++j) bias[j] /= R, cover[j] /= R;
    tau /= R;
    const std::string m = to_string(truth);
    o.detail << m << ": bias " << fmt(bias[0]) << "," << fmt(bias[1]) << " cp " << fmt(cover[0]) << "," << fmt(cover[1])
             << " tau2 bias " << fmt(tau) << "; ";
    for (int j = 0; j < 2; ++j) {
      o.require(std::abs(bias[j]) <= kBiasTol, m + " beta" + std::to_string(j + 1) + " bias");
      o.require(cover[j] >= kCoverLo && cover[j] <= kCoverHi, m + " beta" + std::to_string(j + 1) + " coverage");
    }
    o.require(std::abs(tau) <= kTau2BiasTol, m + " tau2 bias");
  }
  return o;
}

Outcome criterion_baseline(const SimStudy& s) {
  Outcome o;
  const auto grid = s0_grid();
  const auto truth_base = TruthBaseline::bimodal();
  for (ModelKind truth : kModels) {
    const auto& rs = s.results.at(truth);
    std::vector<double> avg(grid.size(), 0.0);
    for (const auto& r : rs) {
      const FitSummary& f = *find_fit(r, truth);
      for (std::size_t g = 0; g < grid.size(); ++g) avg[g] += f.s0[g] / static_cast<double>(rs.size());
    }
    double sup = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) sup = std::max(sup, std::abs(avg[g] - truth_base.surv(grid[g])));
    o.detail << to_string(truth) << " sup " << fmt(sup) << "; ";
    o.require(sup <= kS0SupTol, std::string(to_string(truth)) + " S0 sup-norm");
  }
  return o;
}

Outcome criterion_model_choice(const SimStudy& s) {
  Outcome o;
  for (ModelKind truth : kModels) {
    const auto& rs = s.results.at(truth);
    int used = 0, by_lpml = 0, by_dic = 0;
    for (const auto& r : rs) {
      if (r.fits.size() < 3) continue;
      ++used;
      const FitSummary* best_l = &r.fits.front();
      const FitSummary* best_d = &r.fits.front();
      for (const auto& f : r.fits) {
        if (f.lpml > best_l->lpml) best_l = &f;
        if (f.dic < best_d->dic) best_d = &f;
      }
      by_lpml += best_l->model == truth;
      by_dic += best_d->model == truth;
    }
    const double pl = used ? static_cast<double>(by_lpml) / used : 0.0;
    const double pd = used ? static_cast<double>(by_dic) / used : 0.0;
    o.detail << to_string(truth) << " LPML " << by_lpml << "/" << used << " DIC " << by_dic << "/" << used << "; ";
    o.require(used > 0 && pl >= kSelectRate, std::string(to_string(truth)) + " LPML selection");
    o.require(used > 0 && pd >= kSelectRate, std::string(to_string(truth)) + " DIC selection");
  }
  return o;
}

Outcome criterion_residuals(const SimStudy& s) {
  Outcome o;
  for (ModelKind truth : kModels) {
    const auto& rs = s.results.at(truth);
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rs) {
      const FitSummary& f = *find_fit(r, truth);
      if (f.residual_slope == 0.0) continue;
      sum += f.residual_slope;
      ++count;
    }
    const double slope = count ? sum / count : 0.0;
    o.detail << to_string(truth) << " slope " << fmt(slope) << " (" << count << " fits); ";
    o.require(count > 0 && slope >= kSlopeLo && slope <= kSlopeHi, std::string(to_string(truth)) + " Cox-Snell slope");
  }
  return o;
}

// ------------------------------------------------------ variable selection

Outcome criterion_selection() {
  Outcome o;
  McmcConfig cfg;
  cfg.model = ModelKind::PH;
  cfg.selection = true;
  cfg.nburn = 5000;
  cfg.nsave = 10000;
  cfg.nskip = 1;
  cfg.prerun_iterations = 2000;
  cfg.l0 = 2000;
  cfg.store_loglik = false;
  for (const char* name : {"sim4ex1", "sim4ex2"}) {
    const auto design = SimDesign::preset(name, ModelKind::PH);
    const auto sim = simulate(design, 2016);
    cfg.frailty = sim.frailty;
    cfg.seed = 7;
    const auto a = run_chain(sim.data, cfg);
    const auto table = selection_table(a, sim.data.covariate_names());
    const auto& top = table.front();
    o.detail << name << " modal {" << top.covariates << "} " << fmt(top.proportion, 3);
    if (table.size() > 1) o.detail << ", next {" << table[1].covariates << "} " << fmt(table[1].proportion, 3);
    o.detail << "; ";
    if (std::string(name) == "sim4ex1") {
      o.require(top.covariates == "x1,x2" && top.proportion >= kModalProportion, "Example 1 modal model");
    } else {
      o.require(top.covariates == "x1,x2" || top.covariates == "x1,x3", "Example 2 modal model");
    }
  }
  return o;
}

// --------------------------------------------------------------------- FSA

Eigen::MatrixXd dense_corr(const Eigen::MatrixX2d& c, double phi, double nu) {
  const auto m = c.rows();
  Eigen::MatrixXd R(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) R(i, j) = powexp_corr((c.row(i) - c.row(j)).norm(), phi, nu);
  return (1.0 - kNugget) * R + kNugget * Eigen::MatrixXd::Identity(m, m);
}

Outcome criterion_fsa() {
  Outcome o;
  double worst_dense = 0.0, worst_inv = 0.0, worst_det = 0.0;
  Rng rng(515);
  for (int m : {60, 200}) {
    Eigen::MatrixX2d c(m, 2);
    for (int i = 0; i < m; ++i) c.row(i) << rng.uniform(0.0, 10.0), rng.uniform(0.0, 10.0);
    const double phi = solve_phi0(max_pairwise_distance(c), 1.0) * 2.0;
    const Eigen::MatrixXd R = dense_corr(c, phi, 1.0);
    for (int A : {5, 20}) {
      for (int B : {1, 4, 10}) {
        const auto layout = make_fsa_layout(c, FsaDesign{A, B});
        const auto s = fsa_build(c, phi, 1.0, layout);
        const Eigen::MatrixXd& Rt = s.correlation();
        if (B == 1) worst_dense = std::max(worst_dense, (Rt - R).cwiseAbs().maxCoeff());
        // Inverse action and determinant against dense algebra on the approximation.
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(Rt);
        Eigen::VectorXd x(m);
        for (int i = 0; i < m; ++i) x[i] = rng.normal();
        const Eigen::VectorXd dense = ldlt.solve(x);
        worst_inv = std::max(worst_inv, (s.apply_inverse(x) - dense).norm() / dense.norm());
        const double logdet = ldlt.vectorD().array().log().sum();
        worst_det = std::max(worst_det, std::abs(s.log_det_corr() - logdet) / std::abs(logdet));
      }
    }
  }
  o.detail << "B=1 max diff " << fmt(worst_dense, 3) << "; inverse rel " << fmt(worst_inv, 3) << "; logdet rel "
           << fmt(worst_det, 3);
  o.require(worst_dense < kFsaDenseTol, "B=1 exactness");
  o.require(worst_inv < kFsaRelTol, "SMW inverse");
  o.require(worst_det < kFsaRelTol, "determinant");
  return o;
}

// ---------------------------------------------------------------- identities

Outcome criterion_identities() {
  Outcome o;
  Rng rng(606);
  // Equal weights reproduce the centering family.
  double eq = 0.0;
  for (auto fam : {CenteringFamily::LogLogistic, CenteringFamily::LogNormal, CenteringFamily::Weibull}) {
    const auto base = TbpBaseline::centered(fam, 0.4, -0.3, 15);
    for (int k = 0; k < 200; ++k) {
      const double t = std::exp(-5.0 + 10.0 * k / 199.0);
      eq = std::max(eq, std::abs(base.surv(t) - centering_eval(fam, 0.4, -0.3, t).surv));
    }
  }
  // Bernstein cdf against the incomplete beta.
  double bern = 0.0;
  for (int J : {1, 5, 15, 30}) {
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> w(static_cast<std::size_t>(J));
      double sum = 0.0;
      for (auto& x : w) sum += (x = rng.gamma(1.0, 1.0));
      for (auto& x : w) x /= sum;
      for (int k = 1; k < 20; ++k) bern = std::max(bern, std::abs(bernstein_cdf(k / 20.0, w) - oracle::bernstein_cdf(k / 20.0, w)));
    }
  }
  // Density against survival finite differences, every model.
  double fd = 0.0;
  const TbpBaseline base(CenteringFamily::LogLogistic, 0.1, 0.2, {0.05, 0.25, 0.1, 0.3, 0.3});
  const double h = 1e-5;
  for (int k = 0; k < 60; ++k) {
    const auto m = kModels[k % 3];
    const double t = rng.uniform(0.3, 3.0), eta = rng.normal(0.0, 0.6);
    const double num = -(model_surv(m, t + h, eta, base) - model_surv(m, t - h, eta, base)) / (2 * h);
    fd = std::max(fd, std::abs(model_dens(m, t, eta, base) - num));
  }
  // Model collapse at eta = 0.
  double collapse = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double t = rng.exponential(0.5);
    for (auto m : kModels) collapse = std::max(collapse, std::abs(model_surv(m, t, 0.0, base) - base.surv(t)));
  }
  // Turnbull reduces to Kaplan-Meier on exact + right-censored data.
  double km = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<std::pair<double, bool>> raw;
    ResidualSample s;
    for (int i = 0; i < 40; ++i) {
      const double t = rng.exponential(1.0), c = rng.exponential(0.7);
      raw.emplace_back(std::min(t, c), t <= c);
      s.push_back(t <= c ? ResidualInterval{t, t, 0.0, CensoringKind::Exact} : ResidualInterval{c, kInf, 0.0, CensoringKind::Right});
    }
    const auto r = turnbull_npmle(s, TurnbullOptions{200000, 1e-13});
    std::sort(raw.begin(), raw.end());
    double surv = 1.0, risk = static_cast<double>(raw.size());
    for (const auto& [t, ev] : raw) {
      if (ev) {
        surv *= 1.0 - 1.0 / risk;
        km = std::max(km, std::abs(r.survival(t) - surv));
      }
      risk -= 1.0;
    }
  }
  o.detail << "equal-weights " << fmt(eq, 3) << "; bernstein " << fmt(bern, 3) << "; finite-diff " << fmt(fd, 3)
           << "; collapse " << fmt(collapse, 3) << "; Kaplan-Meier " << fmt(km, 3);
  o.require(eq < kIdentityTol, "equal weights");
  o.require(bern < kIdentityTol, "Bernstein cdf");
  o.require(fd < kFdTol, "finite differences");
  o.require(collapse < kIdentityTol, "model collapse");
  o.require(km < kKmTol, "Kaplan-Meier reduction");
  return o;
}

// -------------------------------------------------------- sampler checks

std::vector<double> column(const PosteriorArchive& a, int col) {
  std::vector<double> out(static_cast<std::size_t>(a.draws.rows()));
  for (Eigen::Index l = 0; l < a.draws.rows(); ++l) out[static_cast<std::size_t>(l)] = a.draws(l, col);
  return out;
}

McmcConfig prior_only_config() {
  McmcConfig c;
  c.prerun = false;
  c.nburn = 2000;
  c.nsave = 10000;
  c.nskip = 9;
  c.l0 = 1000;
  c.store_loglik = false;
  c.seed = 4242;
  c.updates = UpdateToggles{false, false, false, false, false, false, false, false};
  return c;
}

Outcome criterion_sampler() {
  Outcome o;
  const Dataset none(std::vector<CensoredObservation>{}, 1, {}, false);

  auto wc = prior_only_config();
  wc.hyper.J = 5;
  wc.updates.z = true;
  wc.init.alpha = 1.0;
  const auto wa = run_chain(none, wc);
  std::vector<double> w1;
  for (Eigen::Index l = 0; l < wa.draws.rows(); ++l) {
    std::vector<double> z(4);
    for (int j = 0; j < 4; ++j) z[static_cast<std::size_t>(j)] = wa.draws(l, wa.layout.z + j);
    w1.push_back(weights_from_logits(z)[0]);
  }
  const double d_w = oracle::ks_distance(w1, [](double x) { return boost::math::ibeta(1.0, 4.0, x); });

  auto ac = prior_only_config();
  ac.hyper.J = 5;
  ac.updates.z = ac.updates.alpha = true;
  const auto aa = run_chain(none, ac);
  const double d_a = oracle::ks_distance(column(aa, aa.layout.alpha), [](double x) { return boost::math::gamma_p(1.0, x); });

  auto vc = prior_only_config();
  vc.frailty = FrailtySpec::iid(1);
  vc.hyper.a_tau = 3.0;
  vc.hyper.b_tau = 2.0;
  vc.updates.frailty = vc.updates.tau2 = true;
  const auto va = run_chain(none, vc);
  const double d_t = oracle::ks_distance(column(va, va.layout.tau2), [](double x) { return boost::math::gamma_q(3.0, 2.0 / x); });
  const boost::math::students_t t6(6.0);
  const double d_v = oracle::ks_distance(column(va, va.layout.v),
                                         [&](double x) { return boost::math::cdf(t6, x / std::sqrt(2.0 / 3.0)); });

  // Gibbs moments at v = (1, 0, -1) on a path graph: Gamma(a + 1, b + 1).
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
  e(0, 1) = e(1, 0) = e(1, 2) = e(2, 1) = 1.0;
  const Dataset three(std::vector<CensoredObservation>{}, 3, {}, false);
  auto gc = prior_only_config();
  gc.frailty = FrailtySpec::icar(e);
  gc.hyper.a_tau = 2.0;
  gc.hyper.b_tau = 1.0;
  Sampler s(three, gc);
  s.initialize();
  ChainState st = s.state();
  st.v = Eigen::Vector3d(1.0, 0.0, -1.0);
  s.set_state(st);
  std::vector<double> prec(100000);
  for (auto& x : prec) {
    s.update_tau2();
    x = 1.0 / s.state().tau2;
  }
  const double shape = 3.0, rate = 2.0;
  const double mean_err = std::abs(oracle::mean(prec) / (shape / rate) - 1.0);
  const double var_err = std::abs(oracle::variance(prec) / (shape / (rate * rate)) - 1.0);

  o.detail << "KS w1 " << fmt(d_w, 3) << ", alpha " << fmt(d_a, 3) << ", tau2 " << fmt(d_t, 3) << ", v " << fmt(d_v, 3)
           << "; precision mean rel err " << fmt(mean_err, 3) << ", variance rel err " << fmt(var_err, 3);
  o.require(d_w < kKsTol, "w marginal");
  o.require(d_a < kKsTol, "alpha marginal");
  o.require(d_t < kKsTol, "tau2 marginal");
  o.require(d_v < kKsTol, "v marginal");
  o.require(mean_err < kGibbsRelTol, "Gibbs mean");
  o.require(var_err < 3 * kGibbsRelTol, "Gibbs variance");
  return o;
}

// ------------------------------------------------------------ determinism

std::string draws_text(const PosteriorArchive& a) {
  std::ostringstream s;
  write_draws_csv(a, s);
  return s.str();
}

Outcome criterion_determinism() {
  Outcome o;
  auto design = SimDesign::preset("sim1", ModelKind::PO);
  design.per_location = 5;
  const auto sim = simulate(design, 99);
  McmcConfig cfg;
  cfg.model = ModelKind::PO;
  cfg.frailty = sim.frailty;
  cfg.nburn = 300;
  cfg.nsave = 300;
  cfg.prerun_iterations = 300;
  cfg.l0 = 200;
  cfg.seed = 31337;
  set_kernel_threads(1);
  const auto a = draws_text(run_chain(sim.data, cfg));
  const auto b = draws_text(run_chain(sim.data, cfg));
  set_kernel_threads(4);
  const auto c = draws_text(run_chain(sim.data, cfg));
  cfg.parallel = false;
  const auto d = draws_text(run_chain(sim.data, cfg));
  set_kernel_threads(0);

  StudySpec spec;
  spec.design = "sim1";
  spec.truth = ModelKind::AFT;
  spec.fits = {ModelKind::AFT, ModelKind::PH};
  spec.mcmc = cfg;
  spec.mcmc.nburn = spec.mcmc.nsave = 100;
  spec.mcmc.prerun_iterations = 100;
  spec.replicates = 3;
  std::ostringstream s1, s3;
  write_study_csv(spec, run_study(spec, 1), s1);
  write_study_csv(spec, run_study(spec, 3), s3);

  o.detail << "repeat " << (a == b ? "identical" : "differs") << "; 4 kernel threads " << (a == c ? "identical" : "differs")
           << "; serial kernel " << (a == d ? "identical" : "differs") << "; study 1 vs 3 workers "
           << (s1.str() == s3.str() ? "identical" : "differs");
  o.require(!a.empty() && a == b, "repeat run");
  o.require(a == c, "kernel threads");
  o.require(a == d, "serial kernel");
  o.require(s1.str() == s3.str(), "study workers");
  return o;
}

// Lines also go to acceptance_report.txt, since ctest hides the output of passing tests.
std::ofstream report_file("acceptance_report.txt");

void emit(const std::string& line) {
  std::cout << line << std::endl;
  report_file << line << std::endl;
}

void report(int id, const char* name, Outcome&& o, bool& all) {
  all = all && o.pass;
  emit("criterion " + std::to_string(id) + " (" + name + "): " + (o.pass ? "PASS" : "FAIL") + "  " + o.detail.str());
}

}  // namespace

int main() {
  set_warning_handler([](const std::string&) {});
  const auto only = selected_criteria();
  bool all = true;
  const auto t0 = std::chrono::steady_clock::now();

  if (only.count(5)) report(5, "FSA exactness and algebra", criterion_fsa(), all);
  if (only.count(6)) report(6, "analytic identities", criterion_identities(), all);
  if (only.count(7)) report(7, "sampler correctness", criterion_sampler(), all);
  if (only.count(9)) report(9, "determinism", criterion_determinism(), all);
  if (only.count(4)) report(4, "variable selection", criterion_selection(), all);
  if (only.count(1) || only.count(2) || only.count(3) || only.count(8)) {
    const auto study = run_simulation_one(only.count(3) > 0, only.count(8) > 0);
    if (only.count(1)) report(1, "Simulation I estimation", criterion_estimation(study), all);
    if (only.count(2)) report(2, "baseline recovery", criterion_baseline(study), all);
    if (only.count(3)) report(3, "model selection", criterion_model_choice(study), all);
    if (only.count(8)) report(8, "Cox-Snell calibration", criterion_residuals(study), all);
  }
  const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  emit(std::string("acceptance ") + (all ? "PASS" : "FAIL") + " (" + fmt(el, 5) + " s)");
  return all ? 0 : 1;
}
