#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spsurv/sampler.hpp"

namespace spsurv {

struct ParameterSummary {
  std::string name;
  double mean = 0.0, median = 0.0, sd = 0.0, lower = 0.0, upper = 0.0;  // 95% equal-tail interval
  double ess = 0.0;
};

// Type-7 quantile of an unsorted sample.
double quantile(std::span<const double> values, double prob);
ParameterSummary summarize(const std::string& name, std::span<const double> draws);
std::vector<ParameterSummary> summarize(const PosteriorArchive& archive);

struct SubModel {
  std::string covariates;  // comma-joined included names, "(none)" when empty
  double proportion = 0.0;
};

// Sub-models visited by the inclusion indicators, most frequent first.
std::vector<SubModel> selection_table(const PosteriorArchive& archive, const std::vector<std::string>& covariates);

void write_summary_table(const std::vector<ParameterSummary>& rows, std::ostream& out);

}  // namespace spsurv
