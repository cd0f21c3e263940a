#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "steercomp/linalg.hpp"
#include "steercomp/metrics.hpp"
#include "steercomp/rng.hpp"

using namespace steercomp;
using Catch::Approx;

TEST_CASE("rmse basics and hand case") {
  const Vector a{0.0, 1.0};
  const Vector b{1.0, 3.0};
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(a, b) == Approx(std::sqrt((1.0 + 4.0) / 2.0)).margin(1e-15));
  const Vector c{0.1, 0.2, 0.3};
  Vector d = c;
  for (double& v : d) v += 0.1;
  CHECK(rmse(c, d) == Approx(0.1).margin(1e-15));
}

TEST_CASE("rmse is symmetric and shift invariant") {
  Xoshiro256ss rng(3);
  Vector a(50), b(50);
  for (std::size_t i = 0; i < 50; ++i) {
    a[i] = rng.uniform(-1, 1);
    b[i] = rng.uniform(-1, 1);
  }
  CHECK(rmse(a, b) == Approx(rmse(b, a)).margin(1e-15));
  Vector a2 = a, b2 = b;
  for (std::size_t i = 0; i < 50; ++i) {
    a2[i] += 5.0;
    b2[i] += 5.0;
  }
  CHECK(rmse(a2, b2) == Approx(rmse(a, b)).margin(1e-12));
  CHECK_THROWS_AS(rmse(a, Vector{1.0}), ContractError);
}

TEST_CASE("cc equals 1 on identity and -1 on reflection about the mean") {
  const Vector m{0.3, 0.7, 1.1, 0.2};
  CHECK(cc(m, m) == Approx(1.0).margin(1e-12));
  double mean = 0.0;
  for (double v : m) mean += v;
  mean /= static_cast<double>(m.size());
  Vector reflected;
  for (double v : m) reflected.push_back(-(v - mean) + mean);
  CHECK(cc(m, reflected) == Approx(-1.0).margin(1e-12));
}

TEST_CASE("cc hand case [1,2,3] vs [1,2,4]") {
  const Vector measured{1.0, 2.0, 3.0};
  const Vector predicted{1.0, 2.0, 4.0};
  // hand evaluation of the centered-product form:
  // num = 3, den = sqrt(2) * sqrt(42/9)
  const double expected = 3.0 / (std::sqrt(2.0) * std::sqrt(42.0 / 9.0));
  CHECK(cc(measured, predicted) == Approx(expected).margin(1e-12));
  CHECK(cc(measured, predicted) == Approx(0.98198).margin(5e-6));
}

TEST_CASE("cc is invariant under positive affine maps and flips sign under negation") {
  Xoshiro256ss rng(9);
  Vector m(40), p(40);
  for (std::size_t i = 0; i < 40; ++i) {
    m[i] = rng.uniform(-1, 1);
    p[i] = 0.6 * m[i] + rng.uniform(-0.2, 0.2);
  }
  const double base = cc(m, p);
  Vector scaled;
  for (double v : p) scaled.push_back(3.0 * v + 7.0);
  CHECK(cc(m, scaled) == Approx(base).margin(1e-12));
  Vector negated;
  for (double v : p) negated.push_back(-v);
  CHECK(cc(m, negated) == Approx(-base).margin(1e-12));
}

TEST_CASE("cc and ce reject constant series with a typed error") {
  const Vector constant{1.0, 1.0, 1.0};
  const Vector varying{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(cc(constant, varying), UndefinedMetricError);
  CHECK_THROWS_AS(cc(varying, constant), UndefinedMetricError);
  CHECK_THROWS_AS(ce(constant, varying), UndefinedMetricError);
}

TEST_CASE("ce definition cases") {
  const Vector m{0.0, 1.0, 2.0};
  CHECK(ce(m, m) == Approx(1.0).margin(1e-15));
  const Vector mean_pred{1.0, 1.0, 1.0};
  CHECK(ce(m, mean_pred) == Approx(0.0).margin(1e-15));
  const Vector reversed{2.0, 1.0, 0.0};
  CHECK(ce(m, reversed) == Approx(-3.0).margin(1e-15));  // 1 - 8/2
}

TEST_CASE("ce below zero means worse than the mean predictor") {
  const Vector m{0.0, 1.0, 2.0, 3.0};
  const Vector terrible{30.0, -20.0, 50.0, -40.0};
  CHECK(ce(m, terrible) < 0.0);
}

TEST_CASE("oscillation index on constant and alternating series") {
  const Vector flat(10, 0.4);
  CHECK(oscillation_index(flat).first == 0.0);

  const double a = 0.3;
  Vector alternating;
  for (int i = 0; i < 20; ++i) alternating.push_back(i % 2 == 0 ? a : -a);
  auto [osc, crossings] = oscillation_index(alternating);
  CHECK(osc == Approx(2.0 * a).margin(1e-15));
  CHECK(crossings == alternating.size() - 2);

  Vector shifted = alternating;
  for (double& v : shifted) v += 1.7;
  CHECK(oscillation_index(shifted).first == Approx(osc).margin(1e-12));
}

TEST_CASE("tracking metrics aggregate lateral error and wheel motion") {
  const Vector lateral{0.0, 0.2, -0.5};
  const Vector theta{0.1, 0.1, 0.1};
  const MetricsReport report = tracking_metrics(lateral, theta);
  REQUIRE(report.max_tracking_error);
  CHECK(*report.max_tracking_error == Approx(0.5));
  REQUIRE(report.oscillation_index);
  CHECK(*report.oscillation_index == 0.0);
  CHECK(report.sample_count == 3);
  CHECK_THROWS_AS(tracking_metrics(Vector{0.1}, Vector{0.1}), InsufficientDataError);
}

TEST_CASE("improvement is the relative reduction") {
  CHECK(improvement(2.0, 1.0) == Approx(0.5));
  CHECK(improvement(2.0, 2.0) == 0.0);
  CHECK(improvement(1.0, 1.5) == Approx(-0.5));
  CHECK_THROWS_AS(improvement(0.0, 1.0), UndefinedMetricError);
}
