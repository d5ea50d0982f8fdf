#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spsurv/baseline.hpp"
#include "spsurv/data.hpp"
#include "spsurv/frailty.hpp"
#include "spsurv/models.hpp"
#include "spsurv/rng.hpp"
#include "spsurv/splines.hpp"

namespace spsurv {

// Random-walk proposal whose covariance switches from sigma0 to the scaled
// running covariance of past states once more than l0 states are recorded.
class AdaptiveProposal {
 public:
  static constexpr long kNever = std::numeric_limits<long>::max();

  AdaptiveProposal() = default;
  AdaptiveProposal(Eigen::MatrixXd sigma0, long l0);

  int dim() const { return static_cast<int>(sigma0_.rows()); }
  Eigen::VectorXd propose(const Eigen::VectorXd& current, Rng& rng) const;
  // Adds the state after an iteration to the running moments (Welford).
  void record(const Eigen::VectorXd& state);
  Eigen::MatrixXd covariance() const;
  long recorded() const { return count_; }
  const Eigen::MatrixXd& initial() const { return sigma0_; }

 private:
  Eigen::MatrixXd sigma0_, chol0_;
  long l0_ = 5000;
  long count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
  mutable Eigen::MatrixXd chol_cache_;
  mutable long chol_count_ = -1;
};

struct Hyperparameters {
  int J = 15;
  std::optional<Eigen::VectorXd> beta0;    // default 0
  std::optional<Eigen::MatrixXd> W0;       // default 1e10 I, g-prior under selection
  std::optional<Eigen::Vector2d> theta0;   // default prerun estimate
  std::optional<Eigen::Matrix2d> V0;       // default 10 x prerun covariance
  double a_alpha = 1.0, b_alpha = 1.0;
  double a_tau = 0.001, b_tau = 0.001;
  double a_phi = 2.0;
  std::optional<double> b_phi;             // default (a_phi - 1) / phi0
  double M = 10.0, q = 0.9;                // g-prior calibration
  double inclusion = 0.5;                  // prior P(gamma_j = 1)
};

struct UpdateToggles {
  bool z = true, theta = true, beta = true, alpha = true, frailty = true, tau2 = true, phi = true, gamma = true;
};

struct InitialValues {
  std::optional<Eigen::VectorXd> z, beta, xi, v;
  std::optional<Eigen::Vector2d> theta;
  std::optional<double> alpha, tau2, phi;
};

struct McmcConfig {
  ModelKind model = ModelKind::PH;
  CenteringFamily family = CenteringFamily::LogLogistic;
  FrailtySpec frailty;
  int nburn = 1000, nsave = 1000, nskip = 0;  // nskip = iterations discarded between saves
  std::uint64_t seed = 1;
  long l0 = 5000;
  bool selection = false;
  std::vector<int> nonlinear;  // covariate columns with spline terms
  int spline_K = 5;
  Hyperparameters hyper;
  UpdateToggles updates;
  InitialValues init;
  bool prerun = true;
  int prerun_iterations = 2000;
  bool verify_cache = false;  // compare the cached likelihood with a fresh one after every sweep
  bool parallel = true;       // OpenMP likelihood kernel
  bool store_loglik = true;
};

// Names the columns of a draw vector.
struct ParameterLayout {
  int p = 0, nxi = 0, J = 15, m = 0;
  bool selection = false, has_frailty = false, has_tau2 = false, has_phi = false;
  int beta = 0, gamma = 0, xi = 0, theta = 0, z = 0, alpha = 0, v = 0, tau2 = 0, phi = 0, width = 0;

  static ParameterLayout make(int p, bool selection, int nxi, int J, FrailtyKind frailty, int m);
  std::vector<std::string> names(const std::vector<std::string>& covariates,
                                 const std::vector<std::string>& spline_names) const;
};

// Everything needed to turn parameter values into a likelihood for one
// dataset: model, baseline family and spline design. Shared by the sampler,
// the criteria recomputation and the residual diagnostics.
class ModelContext {
 public:
  ModelContext(const Dataset& data, ModelKind model, CenteringFamily family, int J, std::vector<int> nonlinear,
               int spline_K);

  const Dataset& data() const { return *data_; }
  ModelKind model() const { return model_; }
  CenteringFamily family() const { return family_; }
  int J() const { return J_; }
  const std::vector<SplineTerm>& splines() const { return splines_; }
  int nxi() const { return static_cast<int>(spline_design_.cols()); }
  const Eigen::MatrixXd& spline_design() const { return spline_design_; }
  std::vector<std::string> spline_names() const;

  TbpBaseline baseline(const Eigen::VectorXd& z, const Eigen::Vector2d& theta) const;
  // eta without the frailty part.
  void fixed_predictor(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, std::span<double> out) const;
  void predictor(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, const Eigen::VectorXd& v,
                 std::span<double> out) const;
  double loglik(const Eigen::VectorXd& beta_eff, const Eigen::VectorXd& xi, const Eigen::VectorXd& v,
                const TbpBaseline& base, std::span<double> per_obs, bool parallel = true) const;

 private:
  const Dataset* data_;
  ModelKind model_;
  CenteringFamily family_;
  int J_;
  std::vector<SplineTerm> splines_;
  Eigen::MatrixXd spline_design_;
};

struct ChainState {
  Eigen::VectorXd z;
  Eigen::Vector2d theta = Eigen::Vector2d::Zero();
  Eigen::VectorXd beta, gamma, xi, v;
  double alpha = 1.0, tau2 = 1.0, phi = 0.0;

  Eigen::VectorXd beta_eff() const { return gamma.size() ? Eigen::VectorXd(gamma.cwiseProduct(beta)) : beta; }
  Eigen::VectorXd pack(const ParameterLayout& layout) const;
  static ChainState unpack(const ParameterLayout& layout, const Eigen::VectorXd& row);
};

struct BlockStats {
  long proposed = 0;
  long accepted = 0;
  long nonfinite = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct PrerunResult {
  Eigen::Vector2d theta_hat = Eigen::Vector2d::Zero();
  Eigen::Matrix2d V_hat = Eigen::Matrix2d::Identity();
  Eigen::VectorXd beta_hat;  // beta then xi
  Eigen::MatrixXd W_hat;
  Eigen::VectorXd v_hat;
  double tau2_hat = 1.0;
  double phi_hat = 0.0;
};

struct ResolvedPriors {
  Eigen::VectorXd beta0;
  Eigen::MatrixXd W0;       // covariance for (beta, xi)
  Eigen::Vector2d theta0 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d V0 = Eigen::Matrix2d::Identity();
  double g = 0.0;           // g-prior constant for beta under selection
  double phi0 = 0.0, b_phi = 0.0;
  bool ridge_added = false;
};

struct PosteriorArchive {
  ParameterLayout layout;
  std::vector<std::string> names;
  Eigen::MatrixXd draws;          // L x width
  Eigen::MatrixXd loglik;         // L x n (empty if not stored)
  Eigen::VectorXd loglik_total;   // L
  double loglik_at_mean = 0.0;
  std::map<std::string, BlockStats> blocks;
  PrerunResult prerun;
  ResolvedPriors priors;
  std::uint64_t seed = 0;
  long iterations = 0;
};

// Resolves default hyperparameters that do not need the prerun (g, W0, phi0).
ResolvedPriors resolve_priors(const ModelContext& ctx, const McmcConfig& config);

class Sampler {
 public:
  Sampler(const Dataset& data, McmcConfig config);

  const McmcConfig& config() const { return config_; }
  const ModelContext& context() const { return ctx_; }
  const ParameterLayout& layout() const { return layout_; }
  const ChainState& state() const { return state_; }
  const ResolvedPriors& priors() const { return priors_; }
  double cached_loglik() const { return total_; }
  const std::vector<double>& cached_per_obs() const { return per_obs_; }
  const std::map<std::string, BlockStats>& block_stats() const { return stats_; }
  const PrecisionStructure& structure() const { return structure_; }

  // Short chain with the Bernstein weights pinned at 1/J and vague priors.
  PrerunResult parametric_prerun();
  // Sets priors, proposals and the starting state (from the prerun when enabled).
  void initialize();
  void set_state(const ChainState& s);

  bool update_z();
  bool update_theta();
  bool update_beta();
  bool update_alpha();
  void update_frailties();
  void update_tau2();
  bool update_phi();
  void update_gamma();
  // One full sweep in the fixed order z, theta, beta(+xi), alpha, v, tau2, phi, gamma.
  void sweep();

  // Joint log posterior up to a constant (on the sampling scale of z).
  double log_joint() const;
  // Throws when the cached likelihood differs from a fresh evaluation.
  void verify_cache() const;

  PosteriorArchive run();

 private:
  double fresh_loglik(const ChainState& s, std::vector<double>& per_obs) const;
  void refresh_cache();
  double beta_log_prior(const Eigen::VectorXd& coef) const;
  double theta_log_prior(const Eigen::Vector2d& theta) const;
  double phi_log_target(const PrecisionStructure& s, double phi) const;
  BlockStats& stat(const char* name) { return stats_[name]; }

  const Dataset* data_;
  McmcConfig config_;
  ModelContext ctx_;
  ParameterLayout layout_;
  ResolvedPriors priors_;
  PrerunResult prerun_;
  bool pinned_weights_ = false;  // prerun mode: z fixed at 0, alpha fixed

  ChainState state_;
  TbpBaseline base_;
  std::vector<double> eta_fixed_, eta_, per_obs_, scratch_;
  double total_ = 0.0;

  PrecisionStructure structure_;
  std::optional<FsaLayout> fsa_layout_;
  Eigen::LLT<Eigen::MatrixXd> w0_llt_;
  Eigen::Matrix2d v0_inv_ = Eigen::Matrix2d::Identity();

  AdaptiveProposal prop_z_, prop_theta_, prop_beta_, prop_alpha_, prop_phi_;
  std::array<Rng, 8> rng_;
  std::map<std::string, BlockStats> stats_;
};

// Convenience: construct, prerun, initialize and run.
PosteriorArchive run_chain(const Dataset& data, const McmcConfig& config);

}  // namespace spsurv
