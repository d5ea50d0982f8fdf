#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spsurv/data.hpp"
#include "spsurv/sampler.hpp"

namespace spsurv {

// Options shared by fit and diagnose; option names double as config keys.
struct FitOptions {
  std::string data;
  std::string t1 = "t1", t2 = "t2", trunc;
  std::vector<std::string> covariates;
  std::string location, coord_x, coord_y, sites;
  std::string model = "PH", family = "loglogistic", frailty = "none";
  std::string adjacency;
  double nu = 1.0;
  int fsa_knots = 0, fsa_blocks = 1;
  bool selection = false;
  std::vector<std::string> nonlinear;
  int spline_k = 5, J = 15;
  int nburn = 1000, nsave = 1000, nskip = 0;
  std::uint64_t seed = 1;
  long l0 = 5000;
  int prerun_iterations = 2000;
  bool no_prerun = false;
  int threads = 0;
  std::string out = "spsurv_out";
  bool loglik_csv = false;
  bool svg = false;
};

struct FitInputs {
  LoadedData loaded;
  McmcConfig mcmc;
};

// Loads the data and assembles the sampler configuration. Throws DataError or
// std::invalid_argument on invalid input.
FitInputs prepare_fit(const FitOptions& options);

// Entry point behind the spsurv executable. Returns the process exit code:
// 0 success, 1 invalid input or failure, 2 missing input file.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spsurv
