#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "spsurv/data.hpp"
#include "spsurv/sampler.hpp"

namespace spsurv {

// Cox-Snell residual interval r(t) = -log S_x(t) for one record. Exact
// records have lo == hi; right-censored ones have hi = inf. `entry` is r(u),
// zero without truncation.
struct ResidualInterval {
  double lo = 0.0, hi = 0.0, entry = 0.0;
  CensoringKind kind = CensoringKind::Exact;
};

using ResidualSample = std::vector<ResidualInterval>;

// Residuals of every record under each of the given archive draws.
std::vector<ResidualSample> coxsnell_residuals(const PosteriorArchive& archive, const ModelContext& ctx,
                                               const std::vector<Eigen::Index>& draws);
// `count` evenly spaced retained draws (at most all of them).
std::vector<Eigen::Index> thinned_draws(Eigen::Index total, int count);

// Support interval of the NPMLE. A point mass has lo == hi and closed ends;
// otherwise the support is (lo, hi].
struct TurnbullInterval {
  double lo = 0.0, hi = 0.0;
  bool open_left = false;
};

struct TurnbullResult {
  std::vector<TurnbullInterval> support;
  std::vector<double> mass;
  int iterations = 0;
  bool converged = false;

  // Mass on support intervals starting at or after interval j: S just before j.
  double survival_before(std::size_t j) const;
  // P(X > x) for x outside the support interiors.
  double survival(double x) const;
};

struct TurnbullOptions {
  int max_iterations = 1000;
  double tolerance = 1e-8;
};

// Self-consistency EM on the innermost intervals. Left-truncated entries
// condition each record on exceeding its entry point.
TurnbullResult turnbull_npmle(const ResidualSample& sample, const TurnbullOptions& options = {});

struct PlotPoint {
  int draw = 0;
  double r = 0.0;
  double cumhaz = 0.0;
};

// (r, -log S) at the left end of each support interval with positive
// survival, one trace per draw.
std::vector<PlotPoint> residual_plot_data(const std::vector<ResidualSample>& samples, const TurnbullOptions& options = {});
std::vector<PlotPoint> residual_plot_data(const PosteriorArchive& archive, const ModelContext& ctx, int draws = 10);

// Least-squares slope of cumhaz on r over points with survival >= min_survival.
double cumhaz_slope(const std::vector<PlotPoint>& points, double min_survival = 0.0);

void write_plot_csv(const std::vector<PlotPoint>& points, std::ostream& out);
// Minimal SVG scatter of the traces with the 45-degree reference line.
void write_plot_svg(const std::vector<PlotPoint>& points, std::ostream& out);

}  // namespace spsurv
