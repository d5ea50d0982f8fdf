#include "spsurv/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "spsurv/criteria.hpp"
#include "spsurv/splines.hpp"

namespace spsurv {

double quantile(std::span<const double> values, double prob) {
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, prob);
}

ParameterSummary summarize(const std::string& name, std::span<const double> draws) {
  ParameterSummary r;
  r.name = name;
  if (draws.empty()) return r;
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  double sum = 0.0;
  for (double x : s) sum += x;
  r.mean = sum / static_cast<double>(s.size());
  double ss = 0.0;
  for (double x : s) ss += (x - r.mean) * (x - r.mean);
  r.sd = s.size() > 1 ? std::sqrt(ss / static_cast<double>(s.size() - 1)) : 0.0;
  r.median = quantile_sorted(s, 0.5);
  r.lower = quantile_sorted(s, 0.025);
  r.upper = quantile_sorted(s, 0.975);
  r.ess = draws.size() >= 10 ? ess(draws).ess : static_cast<double>(draws.size());
  return r;
}

std::vector<ParameterSummary> summarize(const PosteriorArchive& a) {
  std::vector<ParameterSummary> out;
  std::vector<double> col(static_cast<std::size_t>(a.draws.rows()));
  for (Eigen::Index k = 0; k < a.draws.cols(); ++k) {
    for (Eigen::Index l = 0; l < a.draws.rows(); ++l) col[static_cast<std::size_t>(l)] = a.draws(l, k);
    out.push_back(summarize(a.names[static_cast<std::size_t>(k)], col));
  }
  return out;
}

std::vector<SubModel> selection_table(const PosteriorArchive& a, const std::vector<std::string>& covariates) {
  std::vector<SubModel> out;
  const auto& l = a.layout;
  if (!l.selection || a.draws.rows() == 0) return out;
  std::map<std::string, long> counts;
  for (Eigen::Index r = 0; r < a.draws.rows(); ++r) {
    std::string key;
    for (int j = 0; j < l.p; ++j)
      if (a.draws(r, l.gamma + j) == 1.0) key += (key.empty() ? "" : ",") + covariates[static_cast<std::size_t>(j)];
    ++counts[key.empty() ? "(none)" : key];
  }
  for (const auto& [k, c] : counts) out.push_back({k, static_cast<double>(c) / static_cast<double>(a.draws.rows())});
  std::stable_sort(out.begin(), out.end(), [](const SubModel& x, const SubModel& y) { return x.proportion > y.proportion; });
  return out;
}

void write_summary_table(const std::vector<ParameterSummary>& rows, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %14s %14s %14s %14s %14s %9s\n", "parameter", "mean", "median", "sd", "2.5%", "97.5%",
                "ess");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %14.6e %14.6e %14.6e %14.6e %14.6e %9.1f\n", r.name.c_str(), r.mean, r.median, r.sd,
                  r.lower, r.upper, r.ess);
    out << buf;
  }
}

}  // namespace spsurv
