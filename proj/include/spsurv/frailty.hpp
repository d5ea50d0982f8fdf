#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spsurv {

enum class FrailtyKind { None, IID, ICAR, GRF };

const char* to_string(FrailtyKind kind);
FrailtyKind parse_frailty(const std::string& name);

struct FsaDesign {
  int knots = 0;   // A
  int blocks = 1;  // B
};

struct FrailtySpec {
  FrailtyKind kind = FrailtyKind::None;
  int num_locations = 0;
  Eigen::MatrixXd adjacency;  // ICAR
  Eigen::MatrixX2d coords;    // GRF
  double nu = 1.0;            // powered-exponential shape, fixed
  std::optional<FsaDesign> fsa;

  static FrailtySpec none();
  static FrailtySpec iid(int m);
  // Rejects self loops, asymmetry, isolated regions and disconnected graphs.
  static FrailtySpec icar(Eigen::MatrixXd adjacency);
  static FrailtySpec grf(Eigen::MatrixX2d coords, double nu = 1.0, std::optional<FsaDesign> fsa = std::nullopt);

  int m() const { return num_locations; }
};

inline constexpr double kNugget = 1e-10;

double powexp_corr(double distance, double phi, double nu);
double powexp_corr(const Eigen::Vector2d& s, const Eigen::Vector2d& t, double phi, double nu);
Eigen::MatrixXd distance_matrix(const Eigen::MatrixX2d& coords);
Eigen::MatrixXd distance_matrix(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b);
double max_pairwise_distance(const Eigen::MatrixX2d& coords);

// phi0 such that the correlation at distance d_max equals rho.
double solve_phi0(double d_max, double nu, double rho = 0.001);

// Space-filling subset of sites: start from the site nearest the centroid,
// add farthest points greedily, then swap knots for non-knots while the sum of
// squared nearest-knot distances strictly decreases. Deterministic.
std::vector<int> select_knots(const Eigen::MatrixX2d& coords, int count);
// Block index (0..B-1) per site: block centers from select_knots, each site to
// the nearest center, ties to the lower index.
std::vector<int> assign_blocks(const Eigen::MatrixX2d& coords, int blocks);

struct FsaLayout {
  std::vector<int> knots;
  std::vector<int> block_of;
  int num_blocks = 1;
};

FsaLayout make_fsa_layout(const Eigen::MatrixX2d& coords, const FsaDesign& design);

// Prior precision machinery for one value of phi. Immutable; a phi change
// builds a fresh value.
class PrecisionStructure {
 public:
  FrailtyKind kind() const { return kind_; }
  int m() const { return m_; }
  int rank() const { return rank_; }
  double phi() const { return phi_; }

  // v'Cv with C = F_e - E (ICAR), I (IID) or R^{-1} (GRF).
  double quad_form(const Eigen::VectorXd& v) const;
  // log det R for GRF; 0 otherwise.
  double log_det_corr() const { return log_det_; }

  struct Conditional {
    double mean;
    double variance;
  };
  Conditional conditional(int i, const Eigen::VectorXd& v, double tau2) const;

  // GRF only: R^{-1} x (Sherman-Morrison-Woodbury under FSA) and the
  // correlation matrix itself (R or its FSA approximation) for checking.
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& x) const;
  const Eigen::MatrixXd& precision() const { return precision_; }
  const Eigen::MatrixXd& correlation() const { return corr_; }
  bool approximated() const { return fsa_.has_value(); }

  friend PrecisionStructure build_iid(int m);
  friend PrecisionStructure build_icar(const Eigen::MatrixXd& adjacency);
  friend PrecisionStructure build_grf_dense(const Eigen::MatrixX2d& coords, double phi, double nu);
  friend PrecisionStructure fsa_build(const Eigen::MatrixX2d& coords, double phi, double nu, const FsaLayout& layout);

 private:
  FrailtyKind kind_ = FrailtyKind::None;
  int m_ = 0;
  int rank_ = 0;
  double phi_ = 0.0;
  double log_det_ = 0.0;
  std::vector<std::vector<int>> neighbors_;  // ICAR
  Eigen::MatrixXd corr_;                     // GRF
  Eigen::MatrixXd precision_;                // GRF (dense R^{-1})

  struct FsaFactors {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    MatL rs_inv;      // block-diagonal inverse of the residual part
    MatL rs_inv_u;    // R_s^{-1} rho_mA
    Eigen::LLT<MatL> inner;  // rho_AA/(1-eps) + rho_mA' R_s^{-1} rho_mA
  };
  std::optional<FsaFactors> fsa_;
};

PrecisionStructure build_iid(int m);
PrecisionStructure build_icar(const Eigen::MatrixXd& adjacency);
PrecisionStructure build_grf_dense(const Eigen::MatrixX2d& coords, double phi, double nu);
PrecisionStructure fsa_build(const Eigen::MatrixX2d& coords, double phi, double nu, const FsaLayout& layout);

// Dispatches on the spec; layout is required when the spec uses FSA.
PrecisionStructure build_structure(const FrailtySpec& spec, double phi, const FsaLayout* layout = nullptr);

struct QuadFormLogDet {
  double quad_form;
  int rank;
  double log_det_corr;
};
QuadFormLogDet quad_form_and_logdet(const PrecisionStructure& s, const Eigen::VectorXd& v);

}  // namespace spsurv
