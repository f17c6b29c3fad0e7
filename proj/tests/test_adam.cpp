#include <doctest.h>

#include <cmath>
#include <limits>

#include "mapl/adam.hpp"
#include "mapl/error.hpp"

using namespace mapl;

TEST_SUITE("adam") {

TEST_CASE("first step moves by the learning rate") {
  AdamState s(AdamConfig{}, 1);
  Eigen::VectorXd p(1), g(1);
  p << 0.5;
  g << 1.0;
  adam_step(s, p, g);
  CHECK(std::abs(p[0] - (0.5 - 1e-3)) < 1e-6);
  CHECK(s.step == 1);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  AdamState s(AdamConfig{}, 3);
  Eigen::VectorXd p = Eigen::VectorXd::LinSpaced(3, -1, 1);
  const Eigen::VectorXd before = p;
  for (int i = 0; i < 5; ++i) adam_step(s, p, Eigen::VectorXd::Zero(3));
  CHECK(p == before);
}

TEST_CASE("update is a pure function of state and gradient") {
  AdamState a(AdamConfig{}, 2), b(AdamConfig{}, 2);
  Eigen::VectorXd pa(2), pb(2), g(2);
  pa << 1, 2;
  pb = pa;
  g << 0.3, -0.7;
  adam_step(a, pa, g);
  adam_step(b, pb, g);
  CHECK(pa == pb);
  CHECK(a.m == b.m);
  CHECK(a.v == b.v);
}

TEST_CASE("non-finite gradients are rejected without side effects") {
  AdamState s(AdamConfig{}, 2);
  Eigen::VectorXd p(2), g(2);
  p << 1, 2;
  g << 0.1, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(s, p, g), NumericalError);
  CHECK(s.step == 0);
  CHECK(p[0] == 1.0);
  CHECK(s.m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shape mismatch is a config error") {
  AdamState s(AdamConfig{}, 2);
  Eigen::VectorXd p(3), g(3);
  p.setZero();
  g.setOnes();
  CHECK_THROWS_AS(adam_step(s, p, g), ConfigError);
}

}
