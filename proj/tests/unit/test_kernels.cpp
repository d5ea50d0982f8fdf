#include <doctest.h>

#include <vector>

#include "spsurv/kernels.hpp"
#include "spsurv/simgen.hpp"

using namespace spsurv;

TEST_CASE("parallel kernel matches the serial reference bit for bit") {
  auto design = SimDesign::preset("sim1", ModelKind::PO);
  const auto sim = simulate(design, 77);
  const auto& d = sim.data;
  const auto base = TbpBaseline(CenteringFamily::LogLogistic, 0.1, 0.2, {0.1, 0.4, 0.2, 0.3});
  std::vector<double> eta(d.n());
  linear_predictor(d, Eigen::Vector2d(0.8, 1.1), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n())), sim.v, eta);
  std::vector<double> a(d.n()), b(d.n());
  for (auto m : {ModelKind::AFT, ModelKind::PH, ModelKind::PO}) {
    const double s = loglik_serial(m, d, eta, base, a);
    for (int threads : {1, 2, 4}) {
      set_kernel_threads(threads);
      const double p = loglik_parallel(m, d, eta, base, b);
      CHECK(s == p);
      CHECK(a == b);
    }
    set_kernel_threads(0);
  }
}

TEST_CASE("subset recomputation and predictor") {
  auto design = SimDesign::preset("sim1", ModelKind::PH);
  const auto sim = simulate(design, 5);
  const auto& d = sim.data;
  const auto base = TbpBaseline::centered(CenteringFamily::Weibull, 0.0, 0.0, 5);
  std::vector<double> eta(d.n()), full(d.n()), part(d.n(), 0.0);
  linear_predictor(d, Eigen::Vector2d(1.0, -1.0), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d.n())), sim.v, eta);
  const auto& o = d[3];
  CHECK(eta[3] == doctest::Approx(o.x[0] - o.x[1] + sim.v[o.location]).epsilon(1e-14));
  loglik_serial(ModelKind::PH, d, eta, base, full);
  const auto& rows = d.by_location()[2];
  loglik_subset(ModelKind::PH, d, rows, eta, base, part);
  for (int i : rows) CHECK(part[static_cast<std::size_t>(i)] == full[static_cast<std::size_t>(i)]);
  std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN(), -kInf};
  CHECK(count_nonfinite(bad) == 2);
}
