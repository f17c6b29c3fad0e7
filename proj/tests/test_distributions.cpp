#include <doctest.h>

#include <cmath>
#include <vector>

#include "mapl/distributions.hpp"
#include "mapl/error.hpp"
#include "mapl/numeric.hpp"
#include "mapl/rng.hpp"

using namespace mapl;

TEST_SUITE("distributions") {

TEST_CASE("names and parameter counts") {
  CHECK(parse_distribution("normal") == DistributionKind::kNormal);
  CHECK(parse_distribution("fosgerau_mabit") == DistributionKind::kFosgerauMabit);
  CHECK_THROWS_AS(parse_distribution("lognormal"), ConfigError);
  CHECK(param_count(DistributionKind::kNormal) == 2);
  CHECK(param_count(DistributionKind::kFosgerauMabit) == 12);
  CHECK(param_count(DistributionKind::kFosgerauMabit, 4) == 4);
}

TEST_CASE("valence sampling") {
  CHECK(sample_valence(AggregateDistribution::normal(2.0, 0.37), 0.5) == doctest::Approx(2.0).epsilon(1e-15));
  std::vector<double> c(12, 0.0);
  c[0] = -1.25;
  CHECK(sample_valence(AggregateDistribution::fosgerau_mabit(c), 0.81) == -1.25);
  std::vector<double> id(12, 0.0);
  id[1] = 1.0;
  CHECK(sample_valence(AggregateDistribution::fosgerau_mabit(id), 0.25) == doctest::Approx(0.25));
  CHECK_THROWS_AS(sample_valence(AggregateDistribution::normal(0, 1), 1.0), ConfigError);
  CHECK_THROWS_AS(sample_valence(AggregateDistribution::normal(0, 1), 0.0), ConfigError);
}

TEST_CASE("normal sampling is increasing and matches moments") {
  const auto d = AggregateDistribution::normal(-0.4, 1.7);
  double prev = -1e300;
  for (int k = 1; k < 100; ++k) {
    const double v = sample_valence(d, k / 100.0);
    CHECK(v > prev);
    prev = v;
  }
  CounterRng r(3, Stream::kTest);
  const int n = 1'000'000;
  double s = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_valence(d, r.uniform());
    s += v;
    sq += v * v;
  }
  const double m = s / n, sd = std::sqrt(sq / n - m * m);
  CHECK(std::abs(m + 0.4) < 3.0 * 1.7 / std::sqrt(n));
  CHECK(std::abs(sd - 1.7) < 3.0 * 1.7 / std::sqrt(2.0 * n));
}

TEST_CASE("normal aggregation closed form") {
  const std::vector<double> a{1, 0, 0};
  auto r = normal_aggregate_params(-1.0, {1, 2}, {0.3, 0.9}, a);
  CHECK(r.first == doctest::Approx(-1.0));
  CHECK(r.second == 0.0);
  const std::vector<double> b{1, 2, 0};
  r = normal_aggregate_params(-1.0, {1, 2}, {1, 1.5}, b);
  CHECK(r.first == doctest::Approx(1.0));
  CHECK(r.second == doctest::Approx(4.0));

  // variance is exactly quadratic in the random features
  const std::vector<double> x{0.3, -0.7, 0.4}, x3{0.3, -2.1, 1.2};
  CHECK(normal_aggregate_params(-1.0, {1, 2}, {1, 1.5}, x3).second ==
        doctest::Approx(9.0 * normal_aggregate_params(-1.0, {1, 2}, {1, 1.5}, x).second).epsilon(1e-14));
}

TEST_CASE("normal aggregation agrees with brute-force sampling") {
  CounterRng r(5, Stream::kTest);
  const int n = 1'000'000;
  double s = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = -1.0 + (1.0 + r.normal()) + (2.0 + 1.5 * r.normal());
    s += v;
    sq += v * v;
  }
  const double m = s / n;
  const std::vector<double> x{1, 1, 1};
  const auto closed = normal_aggregate_params(-1.0, {1, 2}, {1, 1.5}, x);
  CHECK(std::abs(m - closed.first) < 0.01);
  CHECK(std::abs(sq / n - m * m - closed.second) < 0.02);
  CHECK(closed.second == doctest::Approx(3.25));
}

TEST_CASE("polynomial moments") {
  std::vector<double> c(12, 0.0);
  c[0] = 2.5;
  auto m = fm_moments(c);
  CHECK(m.first == doctest::Approx(2.5));
  CHECK(std::abs(m.second) < 1e-12);
  std::vector<double> id(12, 0.0);
  id[1] = 1.0;
  m = fm_moments(id);
  CHECK(m.first == doctest::Approx(0.5));
  CHECK(m.second == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("polynomial moments agree with sampling") {
  CounterRng gen(11, Stream::kTest);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> theta(12);
    for (auto& t : theta) t = gen.uniform(-1.0, 1.0);
    const auto closed = fm_moments(theta);
    CounterRng r(100 + rep, Stream::kTest);
    const int n = 1'000'000;
    double s = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      double v = 0.0, p = 1.0;
      const double u = r.uniform();
      for (double t : theta) v += t * p, p *= u;
      s += v;
      sq += v * v;
    }
    const double mean = s / n;
    CHECK(std::abs(mean - closed.first) < 0.01);
    CHECK(std::abs(sq / n - mean * mean - closed.second) < 0.02);
  }
}

TEST_CASE("Horner evaluation") {
  const std::vector<double> t{1.0, -2.0, 3.0};
  CHECK(fm_polynomial(t, 0.5) == doctest::Approx(1.0 - 1.0 + 0.75));
}

}
