#include "spsurv/frailty.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

namespace spsurv {

const char* to_string(FrailtyKind kind) {
  switch (kind) {
    case FrailtyKind::None: return "none";
    case FrailtyKind::IID: return "iid";
    case FrailtyKind::ICAR: return "icar";
    case FrailtyKind::GRF: return "grf";
  }
  return "?";
}

FrailtyKind parse_frailty(const std::string& name) {
  if (name == "none") return FrailtyKind::None;
  if (name == "iid") return FrailtyKind::IID;
  if (name == "icar" || name == "car") return FrailtyKind::ICAR;
  if (name == "grf") return FrailtyKind::GRF;
  throw std::invalid_argument("unknown frailty '" + name + "' (expected none, iid, icar or grf)");
}

FrailtySpec FrailtySpec::none() { return {}; }

FrailtySpec FrailtySpec::iid(int m) {
  if (m < 1) throw std::invalid_argument("iid frailty needs at least one location");
  FrailtySpec s;
  s.kind = FrailtyKind::IID;
  s.num_locations = m;
  return s;
}

FrailtySpec FrailtySpec::icar(Eigen::MatrixXd adjacency) {
  const auto m = adjacency.rows();
  if (m < 2 || adjacency.cols() != m) throw std::invalid_argument("ICAR adjacency must be square with m >= 2");
  for (Eigen::Index i = 0; i < m; ++i) {
    if (adjacency(i, i) != 0.0) throw std::invalid_argument("ICAR adjacency has a self loop at region " + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < m; ++j) {
      if (adjacency(i, j) != adjacency(j, i)) throw std::invalid_argument("ICAR adjacency is not symmetric");
      if (adjacency(i, j) != 0.0 && adjacency(i, j) != 1.0) throw std::invalid_argument("ICAR adjacency entries must be 0/1");
    }
    if (adjacency.row(i).sum() < 1.0)
      throw std::invalid_argument("ICAR region " + std::to_string(i + 1) + " has no neighbors");
  }
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  std::queue<Eigen::Index> q;
  q.push(0);
  seen[0] = 1;
  Eigen::Index reached = 1;
  while (!q.empty()) {
    const auto i = q.front();
    q.pop();
    for (Eigen::Index j = 0; j < m; ++j)
      if (adjacency(i, j) != 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = 1;
        ++reached;
        q.push(j);
      }
  }
  if (reached != m) throw std::invalid_argument("ICAR adjacency graph is disconnected");
  FrailtySpec s;
  s.kind = FrailtyKind::ICAR;
  s.num_locations = static_cast<int>(m);
  s.adjacency = std::move(adjacency);
  return s;
}

FrailtySpec FrailtySpec::grf(Eigen::MatrixX2d coords, double nu, std::optional<FsaDesign> fsa) {
  const auto m = coords.rows();
  if (m < 1) throw std::invalid_argument("GRF frailty needs at least one site");
  if (!(nu > 0.0 && nu <= 2.0)) throw std::invalid_argument("powered-exponential shape must lie in (0,2]");
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      if (coords(i, 0) == coords(j, 0) && coords(i, 1) == coords(j, 1))
        throw std::invalid_argument("GRF sites " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                    " share coordinates");
  if (fsa) {
    if (fsa->knots < 1 || fsa->knots > m) throw std::invalid_argument("FSA knot count out of range");
    if (fsa->blocks < 1 || fsa->blocks > m) throw std::invalid_argument("FSA block count out of range");
  }
  FrailtySpec s;
  s.kind = FrailtyKind::GRF;
  s.num_locations = static_cast<int>(m);
  s.coords = std::move(coords);
  s.nu = nu;
  s.fsa = fsa;
  return s;
}

double powexp_corr(double distance, double phi, double nu) { return std::exp(-std::pow(phi * distance, nu)); }

double powexp_corr(const Eigen::Vector2d& s, const Eigen::Vector2d& t, double phi, double nu) {
  return powexp_corr((s - t).norm(), phi, nu);
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixX2d& a, const Eigen::MatrixX2d& b) {
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

Eigen::MatrixXd distance_matrix(const Eigen::MatrixX2d& coords) { return distance_matrix(coords, coords); }

double max_pairwise_distance(const Eigen::MatrixX2d& coords) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < coords.rows(); ++i)
    for (Eigen::Index j = i + 1; j < coords.rows(); ++j) d = std::max(d, (coords.row(i) - coords.row(j)).norm());
  return d;
}

double solve_phi0(double d_max, double nu, double rho) {
  if (!(d_max > 0.0)) throw std::invalid_argument("solve_phi0: maximum distance must be positive");
  return std::pow(-std::log(rho), 1.0 / nu) / d_max;
}

namespace {

double coverage(const Eigen::MatrixXd& d2, const std::vector<int>& knots) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < d2.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int k : knots) best = std::min(best, d2(i, k));
    total += best;
  }
  return total;
}

}  // namespace

std::vector<int> select_knots(const Eigen::MatrixX2d& coords, int count) {
  const int m = static_cast<int>(coords.rows());
  if (count < 1 || count > m) throw std::invalid_argument("select_knots: count must lie in 1..m");
  std::vector<int> knots;
  if (count == m) {
    for (int i = 0; i < m; ++i) knots.push_back(i);
    return knots;
  }
  const Eigen::RowVector2d centroid = coords.colwise().mean();
  int first = 0;
  for (int i = 1; i < m; ++i)
    if ((coords.row(i) - centroid).squaredNorm() < (coords.row(first) - centroid).squaredNorm()) first = i;
  knots.push_back(first);

  Eigen::MatrixXd d2 = distance_matrix(coords).array().square();
  std::vector<double> nearest(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) nearest[static_cast<std::size_t>(i)] = d2(i, first);
  std::vector<char> chosen(static_cast<std::size_t>(m), 0);
  chosen[static_cast<std::size_t>(first)] = 1;
  while (static_cast<int>(knots.size()) < count) {
    int far = -1;
    for (int i = 0; i < m; ++i)
      if (!chosen[static_cast<std::size_t>(i)] && (far < 0 || nearest[static_cast<std::size_t>(i)] > nearest[static_cast<std::size_t>(far)]))
        far = i;
    knots.push_back(far);
    chosen[static_cast<std::size_t>(far)] = 1;
    for (int i = 0; i < m; ++i) nearest[static_cast<std::size_t>(i)] = std::min(nearest[static_cast<std::size_t>(i)], d2(i, far));
  }

  // Swap refinement, bounded number of passes.
  double best = coverage(d2, knots);
  for (int pass = 0; pass < 20; ++pass) {
    bool improved = false;
    for (std::size_t k = 0; k < knots.size(); ++k) {
      for (int j = 0; j < m; ++j) {
        if (chosen[static_cast<std::size_t>(j)]) continue;
        const int old = knots[k];
        knots[k] = j;
        const double c = coverage(d2, knots);
        if (c < best * (1.0 - 1e-12)) {
          best = c;
          chosen[static_cast<std::size_t>(old)] = 0;
          chosen[static_cast<std::size_t>(j)] = 1;
          improved = true;
        } else {
          knots[k] = old;
        }
      }
    }
    if (!improved) break;
  }
  return knots;
}

std::vector<int> assign_blocks(const Eigen::MatrixX2d& coords, int blocks) {
  const int m = static_cast<int>(coords.rows());
  if (blocks < 1 || blocks > m) throw std::invalid_argument("assign_blocks: block count must lie in 1..m");
  std::vector<int> out(static_cast<std::size_t>(m), 0);
  if (blocks == 1) return out;
  const auto centers = select_knots(coords, blocks);
  for (int i = 0; i < m; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int b = 0; b < blocks; ++b) {
      const double d = (coords.row(i) - coords.row(centers[static_cast<std::size_t>(b)])).squaredNorm();
      if (d < bd) {
        bd = d;
        best = b;
      }
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

FsaLayout make_fsa_layout(const Eigen::MatrixX2d& coords, const FsaDesign& design) {
  FsaLayout l;
  l.knots = select_knots(coords, design.knots);
  l.block_of = assign_blocks(coords, design.blocks);
  l.num_blocks = design.blocks;
  return l;
}

double PrecisionStructure::quad_form(const Eigen::VectorXd& v) const {
  switch (kind_) {
    case FrailtyKind::ICAR: {
      double s = 0.0;
      for (int i = 0; i < m_; ++i)
        for (int j : neighbors_[static_cast<std::size_t>(i)])
          if (j > i) {
            const double d = v[i] - v[j];
            s += d * d;
          }
      return s;
    }
    case FrailtyKind::IID: return v.squaredNorm();
    case FrailtyKind::GRF: return v.dot(precision_ * v);
    case FrailtyKind::None: return 0.0;
  }
  return 0.0;
}

PrecisionStructure::Conditional PrecisionStructure::conditional(int i, const Eigen::VectorXd& v, double tau2) const {
  switch (kind_) {
    case FrailtyKind::ICAR: {
      const auto& nb = neighbors_[static_cast<std::size_t>(i)];
      double s = 0.0;
      for (int j : nb) s += v[j];
      const double e = static_cast<double>(nb.size());
      return {s / e, tau2 / e};
    }
    case FrailtyKind::IID: return {0.0, tau2};
    case FrailtyKind::GRF: {
      const double pii = precision_(i, i);
      const double off = precision_.row(i).dot(v) - pii * v[i];
      return {-off / pii, tau2 / pii};
    }
    case FrailtyKind::None: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

Eigen::VectorXd PrecisionStructure::apply_inverse(const Eigen::VectorXd& x) const {
  if (kind_ != FrailtyKind::GRF) throw std::logic_error("apply_inverse is defined for GRF structures only");
  if (!fsa_) return precision_ * x;
  using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const VecL xl = x.cast<long double>();
  const VecL a = fsa_->rs_inv * xl;
  const VecL b = fsa_->rs_inv_u * fsa_->inner.solve(fsa_->rs_inv_u.transpose() * xl);
  return (a - b).cast<double>();
}

PrecisionStructure build_iid(int m) {
  PrecisionStructure s;
  s.kind_ = FrailtyKind::IID;
  s.m_ = m;
  s.rank_ = m;
  return s;
}

PrecisionStructure build_icar(const Eigen::MatrixXd& adjacency) {
  PrecisionStructure s;
  s.kind_ = FrailtyKind::ICAR;
  s.m_ = static_cast<int>(adjacency.rows());
  s.rank_ = s.m_ - 1;
  s.neighbors_.resize(static_cast<std::size_t>(s.m_));
  for (int i = 0; i < s.m_; ++i)
    for (int j = 0; j < s.m_; ++j)
      if (adjacency(i, j) != 0.0) s.neighbors_[static_cast<std::size_t>(i)].push_back(j);
  return s;
}

PrecisionStructure build_grf_dense(const Eigen::MatrixX2d& coords, double phi, double nu) {
  PrecisionStructure s;
  s.kind_ = FrailtyKind::GRF;
  s.m_ = static_cast<int>(coords.rows());
  s.rank_ = s.m_;
  s.phi_ = phi;
  const Eigen::MatrixXd d = distance_matrix(coords);
  s.corr_ = d.unaryExpr([&](double x) { return (1.0 - kNugget) * powexp_corr(x, phi, nu); });
  s.corr_.diagonal().array() += kNugget;
  Eigen::LLT<Eigen::MatrixXd> llt(s.corr_);
  if (llt.info() != Eigen::Success) throw std::runtime_error("GRF correlation matrix is not positive definite");
  s.log_det_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  s.precision_ = llt.solve(Eigen::MatrixXd::Identity(s.m_, s.m_));
  return s;
}

PrecisionStructure fsa_build(const Eigen::MatrixX2d& coords, double phi, double nu, const FsaLayout& layout) {
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const int m = static_cast<int>(coords.rows());
  const int A = static_cast<int>(layout.knots.size());
  const long double eps = kNugget;

  const Eigen::MatrixXd d = distance_matrix(coords);
  MatL rho(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) rho(i, j) = std::exp(-std::pow(static_cast<long double>(phi) * d(i, j), static_cast<long double>(nu)));
  MatL u(m, A), raa(A, A);
  for (int k = 0; k < A; ++k) {
    u.col(k) = rho.col(layout.knots[static_cast<std::size_t>(k)]);
    for (int l = 0; l < A; ++l) raa(k, l) = rho(layout.knots[static_cast<std::size_t>(k)], layout.knots[static_cast<std::size_t>(l)]);
  }
  Eigen::LLT<MatL> raa_llt(raa);
  if (raa_llt.info() != Eigen::Success) throw std::runtime_error("FSA knot correlation is not positive definite (duplicate knots?)");
  const MatL q = u * raa_llt.solve(u.transpose());

  // Residual part, tapered to the blocks.
  MatL rs = MatL::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (layout.block_of[static_cast<std::size_t>(i)] == layout.block_of[static_cast<std::size_t>(j)])
        rs(i, j) = (1 - eps) * (rho(i, j) - q(i, j));
  rs.diagonal().array() += eps;

  std::vector<std::vector<int>> members(static_cast<std::size_t>(layout.num_blocks));
  for (int i = 0; i < m; ++i) members[static_cast<std::size_t>(layout.block_of[static_cast<std::size_t>(i)])].push_back(i);

  PrecisionStructure::FsaFactors f;
  f.rs_inv = MatL::Zero(m, m);
  long double logdet_rs = 0;
  for (const auto& idx : members) {
    const auto nb = static_cast<Eigen::Index>(idx.size());
    if (nb == 0) continue;
    MatL blk(nb, nb);
    for (Eigen::Index a = 0; a < nb; ++a)
      for (Eigen::Index b = 0; b < nb; ++b) blk(a, b) = rs(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    Eigen::LLT<MatL> llt(blk);
    if (llt.info() != Eigen::Success) throw std::runtime_error("FSA residual block is not positive definite");
    logdet_rs += 2 * llt.matrixLLT().diagonal().array().log().sum();
    const MatL inv = llt.solve(MatL::Identity(nb, nb));
    for (Eigen::Index a = 0; a < nb; ++a)
      for (Eigen::Index b = 0; b < nb; ++b) f.rs_inv(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) = inv(a, b);
  }

  const MatL g = raa / (1 - eps);
  f.rs_inv_u = f.rs_inv * u;
  f.inner.compute(g + u.transpose() * f.rs_inv_u);
  if (f.inner.info() != Eigen::Success) throw std::runtime_error("FSA capacitance matrix is not positive definite");
  const long double logdet_inner = 2 * f.inner.matrixLLT().diagonal().array().log().sum();
  const long double logdet_g = 2 * raa_llt.matrixLLT().diagonal().array().log().sum() - A * std::log(1 - eps);

  PrecisionStructure s;
  s.kind_ = FrailtyKind::GRF;
  s.m_ = m;
  s.rank_ = m;
  s.phi_ = phi;
  s.corr_ = ((1 - eps) * q + rs).cast<double>();
  s.log_det_ = static_cast<double>(logdet_rs + logdet_inner - logdet_g);
  s.precision_ = (f.rs_inv - f.rs_inv_u * f.inner.solve(f.rs_inv_u.transpose())).cast<double>();
  s.fsa_ = std::move(f);
  return s;
}

PrecisionStructure build_structure(const FrailtySpec& spec, double phi, const FsaLayout* layout) {
  switch (spec.kind) {
    case FrailtyKind::None: return {};
    case FrailtyKind::IID: return build_iid(spec.m());
    case FrailtyKind::ICAR: return build_icar(spec.adjacency);
    case FrailtyKind::GRF:
      if (spec.fsa) {
        if (!layout) throw std::logic_error("FSA structure requested without a layout");
        return fsa_build(spec.coords, phi, spec.nu, *layout);
      }
      return build_grf_dense(spec.coords, phi, spec.nu);
  }
  return {};
}

QuadFormLogDet quad_form_and_logdet(const PrecisionStructure& s, const Eigen::VectorXd& v) {
  return {s.quad_form(v), s.rank(), s.log_det_corr()};
}

}  // namespace spsurv
