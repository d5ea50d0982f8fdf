#include <doctest.h>

#include <sstream>

#include "spsurv/csv.hpp"
#include "spsurv/data.hpp"

using namespace spsurv;

namespace {
CensoredObservation rec(double a, double b, double u = 0.0) {
  CensoredObservation o;
  o.a = a;
  o.b = b;
  o.u = u;
  return o;
}
}  // namespace

TEST_CASE("censoring kind is inferred from the endpoints") {
  CHECK(rec(2.0, 2.0).kind() == CensoringKind::Exact);
  CHECK(rec(2.0, kInf).kind() == CensoringKind::Right);
  CHECK(rec(0.0, 3.0).kind() == CensoringKind::Left);
  CHECK(rec(1.0, 3.0, 1.0).kind() == CensoringKind::Left);
  CHECK(rec(1.0, 3.0).kind() == CensoringKind::Interval);
  CHECK(rec(1.0, std::nextafter(1.0, 2.0)).kind() == CensoringKind::Interval);
}

TEST_CASE("invalid times are rejected") {
  CHECK_THROWS_AS(validate_times(0.0, 3.0, 2.0), DataError);
  CHECK_THROWS_AS(validate_times(2.0, 1.0, 3.0), DataError);
  CHECK_THROWS_AS(validate_times(0.0, 0.0, 0.0), DataError);
  CHECK_THROWS_AS(validate_times(-1.0, 1.0, 2.0), DataError);
  CHECK_NOTHROW(validate_times(0.0, 1.0, kInf));
}

TEST_CASE("csv round trip keeps every record") {
  std::istringstream in(
      "t1,t2,trunc,x1,loc\n"
      "1.5,1.5,,0.2,A\n"
      "2,,,1.0,B\n"
      ",3,0.5,-1,A\n"
      "1,2,0.5,0,B\n");
  CsvSchema s;
  s.trunc = "trunc";
  s.covariates = {"x1"};
  s.location = "loc";
  const auto loaded = load_csv(in, s);
  const auto& d = loaded.data;
  REQUIRE(d.n() == 4);
  CHECK(d.m() == 2);
  CHECK(d[0].kind() == CensoringKind::Exact);
  CHECK(d[1].kind() == CensoringKind::Right);
  CHECK(d[2].kind() == CensoringKind::Left);
  CHECK(d[2].a == 0.5);
  CHECK(d[3].kind() == CensoringKind::Interval);
  CHECK(d[3].location == 1);
  CHECK(d.by_location()[0].size() == 2);
  CHECK(d.covariate_means()[0] == doctest::Approx(0.05));

  std::ostringstream out;
  write_csv(d, out);
  std::istringstream back(out.str());
  const auto again = load_csv(back, standard_schema(d));
  REQUIRE(again.data.n() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(again.data[i].a == d[i].a);
    CHECK(again.data[i].b == d[i].b);
    CHECK(again.data[i].u == d[i].u);
    CHECK(again.data[i].x == d[i].x);
    CHECK(again.data[i].location == d[i].location);
  }
}

TEST_CASE("bad rows are reported") {
  std::istringstream in("t1,t2\n3,2\n");
  CHECK_THROWS_AS(load_csv(in, CsvSchema{}), DataError);
}

TEST_CASE("time-varying subjects split into truncated records") {
  TimeVaryingSubject s;
  s.u = 0.0;
  s.a = 5.0;
  s.b = 5.0;
  s.epochs = {{0.0, {1.0}}, {2.0, {3.0}}, {4.0, {7.0}}};
  const auto r = expand_time_varying(s);
  REQUIRE(r.size() == 3);
  CHECK(r[0].u == 0.0);
  CHECK(r[0].a == 2.0);
  CHECK(r[0].kind() == CensoringKind::Right);
  CHECK(r[1].u == 2.0);
  CHECK(r[1].a == 4.0);
  CHECK(r[2].u == 4.0);
  CHECK(r[2].kind() == CensoringKind::Exact);
  CHECK(r[2].x[0] == 7.0);
}

TEST_CASE("adjacency formats agree") {
  std::istringstream m("0 1 0\n1 0 1\n0 1 0\n");
  std::istringstream e("1 2\n2 3\n");
  const auto a = read_adjacency(m);
  const auto b = read_adjacency(e, AdjacencyFormat::EdgeList, 3);
  CHECK(a == b);
  std::ostringstream out;
  write_adjacency(a, out);
  std::istringstream back(out.str());
  CHECK(read_adjacency(back) == a);
}

TEST_CASE("empty locations are rejected unless relaxed") {
  std::vector<CensoredObservation> obs{rec(1.0, 1.0)};
  CHECK_THROWS(Dataset(obs, 2, {}));
  CHECK_NOTHROW(Dataset(obs, 2, {}, false));
}
