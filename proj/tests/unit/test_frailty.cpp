#include <doctest.h>

#include <cmath>
#include <vector>

#include "spsurv/frailty.hpp"
#include "spsurv/rng.hpp"

using namespace spsurv;

namespace {
Eigen::MatrixX2d random_sites(Rng& r, int m, double side = 10.0) {
  Eigen::MatrixX2d c(m, 2);
  for (int i = 0; i < m; ++i) c.row(i) << r.uniform(0.0, side), r.uniform(0.0, side);
  return c;
}

Eigen::MatrixXd dense_R(const Eigen::MatrixX2d& c, double phi, double nu) {
  const int m = static_cast<int>(c.rows());
  Eigen::MatrixXd R(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) R(i, j) = std::exp(-std::pow(phi * (c.row(i) - c.row(j)).norm(), nu));
  return (1.0 - kNugget) * R + kNugget * Eigen::MatrixXd::Identity(m, m);
}

Eigen::MatrixXd path3() {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, 3);
  e(0, 1) = e(1, 0) = e(1, 2) = e(2, 1) = 1.0;
  return e;
}
}  // namespace

TEST_CASE("powered exponential correlation") {
  CHECK(powexp_corr(0.0, 0.7, 1.0) == 1.0);
  CHECK(powexp_corr(2.0, 0.5, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  const double phi0 = solve_phi0(10.0, 1.0);
  CHECK(phi0 == doctest::Approx(0.6908).epsilon(1e-4));
  CHECK(powexp_corr(10.0, phi0, 1.0) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(solve_phi0(4.0, 0.5) == doctest::Approx(std::pow(-std::log(0.001), 2.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("knots and blocks") {
  Eigen::MatrixX2d sq(4, 2);
  sq << 0, 0, 1, 0, 1, 1, 0, 1;
  auto k = select_knots(sq, 2);
  REQUIRE(k.size() == 2);
  std::sort(k.begin(), k.end());
  CHECK(((k[0] == 0 && k[1] == 2) || (k[0] == 1 && k[1] == 3)));

  Rng r(2);
  const auto c = random_sites(r, 30);
  auto all = select_knots(c, 30);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 30; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  for (int b : assign_blocks(c, 1)) CHECK(b == 0);
  CHECK(select_knots(c, 7) == select_knots(c, 7));
  CHECK_THROWS(select_knots(c, 0));
  CHECK_THROWS(select_knots(c, 31));
}

TEST_CASE("ICAR structure") {
  CHECK_THROWS(FrailtySpec::icar(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::MatrixXd split = Eigen::MatrixXd::Zero(4, 4);
  split(0, 1) = split(1, 0) = split(2, 3) = split(3, 2) = 1.0;
  CHECK_THROWS(FrailtySpec::icar(split));

  const auto s = build_structure(FrailtySpec::icar(path3()), 0.0);
  CHECK(s.rank() == 2);
  CHECK(s.quad_form(Eigen::Vector3d(1, 0, -1)) == doctest::Approx(2.0));
  CHECK(s.quad_form(Eigen::Vector3d(4, 4, 4)) == doctest::Approx(0.0));
  CHECK(s.quad_form(Eigen::Vector3d(1.5, 0.5, -0.5)) == doctest::Approx(2.0));
  const auto c = s.conditional(1, Eigen::Vector3d(2.0, 9.0, 2.0), 0.8);
  CHECK(c.mean == doctest::Approx(2.0));
  CHECK(c.variance == doctest::Approx(0.4));
}

TEST_CASE("IID structure") {
  const auto s = build_structure(FrailtySpec::iid(4), 0.0);
  CHECK(s.rank() == 4);
  const Eigen::Vector4d v(1, 2, 3, 4);
  CHECK(s.quad_form(v) == doctest::Approx(30.0));
  const auto c = s.conditional(2, v, 1.7);
  CHECK(c.mean == 0.0);
  CHECK(c.variance == 1.7);
}

TEST_CASE("GRF conditional equals the Schur complement") {
  Eigen::MatrixX2d c(3, 2);
  c << 0, 0, 1, 0, 0.3, 2;
  const double phi = 0.8, nu = 1.0, tau2 = 1.3;
  const auto s = build_structure(FrailtySpec::grf(c, nu), phi);
  const Eigen::MatrixXd R = dense_R(c, phi, nu);
  const Eigen::Vector3d v(0.4, -1.1, 0.9);
  for (int i = 0; i < 3; ++i) {
    std::vector<int> o;
    for (int j = 0; j < 3; ++j)
      if (j != i) o.push_back(j);
    Eigen::Vector2d r12(R(i, o[0]), R(i, o[1]));
    Eigen::Matrix2d R22;
    R22 << R(o[0], o[0]), R(o[0], o[1]), R(o[1], o[0]), R(o[1], o[1]);
    const Eigen::Vector2d v2(v[o[0]], v[o[1]]);
    const Eigen::Vector2d sol = R22.ldlt().solve(r12);
    const double mean = sol.dot(v2);
    const double var = tau2 * (1.0 - r12.dot(sol));
    const auto got = s.conditional(i, v, tau2);
    CHECK(std::abs(got.mean - mean) < 1e-12);
    CHECK(std::abs(got.variance - var) < 1e-12);
  }
  CHECK(s.quad_form(v) == doctest::Approx(v.dot(R.ldlt().solve(v))).epsilon(1e-12));
  CHECK(s.log_det_corr() == doctest::Approx(std::log(R.determinant())).epsilon(1e-12));
}

TEST_CASE("FSA with one block is exact") {
  Rng r(44);
  const auto c = random_sites(r, 40);
  const double phi = 0.5;
  const auto layout = make_fsa_layout(c, FsaDesign{8, 1});
  const auto s = fsa_build(c, phi, 1.0, layout);
  const Eigen::MatrixXd R = dense_R(c, phi, 1.0);
  CHECK((s.correlation() - R).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("FSA inverse, determinant and within-block recovery") {
  Rng r(45);
  const auto c = random_sites(r, 60);
  const double phi = 0.4;
  const auto layout = make_fsa_layout(c, FsaDesign{10, 5});
  const auto s = fsa_build(c, phi, 1.0, layout);
  const Eigen::MatrixXd& Rt = s.correlation();
  Eigen::MatrixXd prod(60, 60);
  for (int j = 0; j < 60; ++j) prod.col(j) = s.apply_inverse(Rt.col(j));
  CHECK((prod - Eigen::MatrixXd::Identity(60, 60)).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::MatrixXd R = dense_R(c, phi, 1.0);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j)
      if (layout.block_of[static_cast<std::size_t>(i)] == layout.block_of[static_cast<std::size_t>(j)])
        REQUIRE(std::abs(Rt(i, j) - R(i, j)) < 1e-10);

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(Rt);
  const double logdet = ldlt.vectorD().array().log().sum();
  CHECK(s.log_det_corr() == doctest::Approx(logdet).epsilon(1e-6));
  Eigen::VectorXd v(60);
  for (int i = 0; i < 60; ++i) v[i] = r.normal();
  CHECK(s.quad_form(v) == doctest::Approx(v.dot(ldlt.solve(v))).epsilon(1e-6));
}

TEST_CASE("nugget keeps nearly coincident sites positive definite") {
  Rng r(46);
  for (int rep = 0; rep < 5; ++rep) {
    auto c = random_sites(r, 50, 1e-3);
    CHECK_NOTHROW(build_structure(FrailtySpec::grf(c, 2.0), 0.1));
  }
}
