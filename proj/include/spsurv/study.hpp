#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spsurv/sampler.hpp"
#include "spsurv/simgen.hpp"

namespace spsurv {

struct StudySpec {
  std::string design = "sim1";
  ModelKind truth = ModelKind::PH;
  std::vector<ModelKind> fits{ModelKind::PH};
  McmcConfig mcmc;                 // model and frailty are filled per fit
  std::uint64_t seed = 1;
  int replicates = 1;
  std::vector<double> s0_grid;     // where the fitted baseline survival is averaged
  int residual_draws = 0;          // > 0 adds a pooled Cox-Snell slope per fit
};

struct FitSummary {
  ModelKind model = ModelKind::PH;
  Eigen::VectorXd beta_mean, beta_lower, beta_upper;
  double tau2_mean = 0.0, tau2_median = 0.0;
  double lpml = 0.0, dic = 0.0, p_d = 0.0, waic = 0.0;
  std::vector<double> s0;          // posterior mean S0 on the grid
  double residual_slope = 0.0;
  double min_acceptance = 0.0, max_acceptance = 0.0;
};

struct ReplicateResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  std::vector<FitSummary> fits;
};

// Seed of replicate r; independent of how replicates are scheduled.
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

FitSummary summarize_fit(const PosteriorArchive& archive, const ModelContext& ctx, ModelKind model,
                         const std::vector<double>& s0_grid, int residual_draws);

ReplicateResult run_replicate(const StudySpec& spec, int replicate);

// Runs all replicates on `jobs` worker threads; results are ordered by replicate.
std::vector<ReplicateResult> run_study(const StudySpec& spec, int jobs,
                                       const std::function<void(const ReplicateResult&)>& on_done = {});

void write_study_csv(const StudySpec& spec, const std::vector<ReplicateResult>& results, std::ostream& out);

}  // namespace spsurv
