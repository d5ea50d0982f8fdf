#include "spsurv/study.hpp"

#include <atomic>
#include <mutex>
#include <ostream>
#include <thread>

#include "spsurv/criteria.hpp"
#include "spsurv/csv.hpp"
#include "spsurv/diagnostics.hpp"
#include "spsurv/kernels.hpp"
#include "spsurv/summary.hpp"

namespace spsurv {

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(replicate + 1));
  return splitmix64(s);
}

FitSummary summarize_fit(const PosteriorArchive& a, const ModelContext& ctx, ModelKind model,
                         const std::vector<double>& s0_grid, int residual_draws) {
  FitSummary f;
  f.model = model;
  const auto& l = a.layout;
  const auto L = a.draws.rows();
  f.beta_mean.resize(l.p);
  f.beta_lower.resize(l.p);
  f.beta_upper.resize(l.p);
  std::vector<double> col(static_cast<std::size_t>(L));
  for (int j = 0; j < l.p; ++j) {
    for (Eigen::Index r = 0; r < L; ++r) col[static_cast<std::size_t>(r)] = a.draws(r, l.beta + j);
    const auto s = summarize("", col);
    f.beta_mean[j] = s.mean, f.beta_lower[j] = s.lower, f.beta_upper[j] = s.upper;
  }
  if (l.has_tau2) {
    for (Eigen::Index r = 0; r < L; ++r) col[static_cast<std::size_t>(r)] = a.draws(r, l.tau2);
    const auto s = summarize("", col);
    f.tau2_mean = s.mean, f.tau2_median = s.median;
  }
  const auto lp = lpml(a.loglik);
  f.lpml = lp.lpml;
  const auto d = dic(a);
  f.dic = d.dic, f.p_d = d.p_d;
  f.waic = waic(a.loglik).waic;
  f.s0.assign(s0_grid.size(), 0.0);
  for (Eigen::Index r = 0; r < L; ++r) {
    const ChainState s = ChainState::unpack(l, a.draws.row(r).transpose());
    const TbpBaseline base = ctx.baseline(s.z, s.theta);
    for (std::size_t g = 0; g < s0_grid.size(); ++g) f.s0[g] += base.surv(s0_grid[g]);
  }
  for (double& v : f.s0) v /= static_cast<double>(L);
  if (residual_draws > 0) f.residual_slope = cumhaz_slope(residual_plot_data(a, ctx, residual_draws), 0.01);
  f.min_acceptance = 1.0, f.max_acceptance = 0.0;
  for (const auto& [name, st] : a.blocks) {
    if (name == "tau2" || name == "gamma" || name.rfind("v[", 0) == 0 || st.proposed == 0) continue;
    f.min_acceptance = std::min(f.min_acceptance, st.rate());
    f.max_acceptance = std::max(f.max_acceptance, st.rate());
  }
  return f;
}

ReplicateResult run_replicate(const StudySpec& spec, int replicate) {
  ReplicateResult r;
  r.replicate = replicate;
  r.seed = replicate_seed(spec.seed, replicate);
  const SimDesign design = SimDesign::preset(spec.design, spec.truth);
  const SimulatedData sim = simulate(design, r.seed);
  for (ModelKind fit : spec.fits) {
    McmcConfig cfg = spec.mcmc;
    cfg.model = fit;
    cfg.frailty = sim.frailty;
    cfg.seed = r.seed;
    Sampler sampler(sim.data, cfg);
    const PosteriorArchive a = sampler.run();
    r.fits.push_back(summarize_fit(a, sampler.context(), fit, spec.s0_grid, spec.residual_draws));
  }
  return r;
}

std::vector<ReplicateResult> run_study(const StudySpec& spec, int jobs,
                                       const std::function<void(const ReplicateResult&)>& on_done) {
  std::vector<ReplicateResult> results(static_cast<std::size_t>(spec.replicates));
  std::atomic<int> next{0};
  std::mutex done_mutex;
  std::exception_ptr failure;
  const auto worker = [&] {
    for (int k = next++; k < spec.replicates; k = next++) {
      try {
        results[static_cast<std::size_t>(k)] = run_replicate(spec, k);
        if (on_done) {
          std::lock_guard lock(done_mutex);
          on_done(results[static_cast<std::size_t>(k)]);
        }
      } catch (...) {
        std::lock_guard lock(done_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  jobs = std::max(1, std::min(jobs, spec.replicates));
  if (jobs == 1) {
    worker();
  } else {
    const int saved = kernel_threads();
    set_kernel_threads(1);
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    pool.clear();
    set_kernel_threads(saved);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

void write_study_csv(const StudySpec& spec, const std::vector<ReplicateResult>& results, std::ostream& out) {
  std::vector<std::string> header{"replicate", "seed", "truth", "fit"};
  const int p = results.empty() || results[0].fits.empty() ? 0 : static_cast<int>(results[0].fits[0].beta_mean.size());
  for (int j = 1; j <= p; ++j)
    for (const char* s : {"mean", "lower", "upper"}) header.push_back("beta" + std::to_string(j) + "_" + s);
  for (const char* s : {"tau2_mean", "tau2_median", "lpml", "dic", "p_d", "waic", "residual_slope", "min_acceptance", "max_acceptance"})
    header.push_back(s);
  for (std::size_t g = 0; g < spec.s0_grid.size(); ++g) header.push_back("s0_" + std::to_string(g + 1));
  write_csv_row(out, header);
  for (const auto& r : results)
    for (const auto& f : r.fits) {
      std::vector<std::string> row{std::to_string(r.replicate + 1), std::to_string(r.seed), to_string(spec.truth), to_string(f.model)};
      for (int j = 0; j < p; ++j)
        for (double v : {f.beta_mean[j], f.beta_lower[j], f.beta_upper[j]}) row.push_back(format_double(v));
      for (double v : {f.tau2_mean, f.tau2_median, f.lpml, f.dic, f.p_d, f.waic, f.residual_slope, f.min_acceptance, f.max_acceptance})
        row.push_back(format_double(v));
      for (double v : f.s0) row.push_back(format_double(v));
      write_csv_row(out, row);
    }
}

}  // namespace spsurv
