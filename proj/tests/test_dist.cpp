#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ibl/dist.hpp"

using namespace ibl;

namespace {

double hb(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

Eigen::MatrixXd random_joint(std::mt19937_64& rng, int nx, int ny) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd p(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) p(i, j) = u(rng);
  return p / p.sum();
}

}  // namespace

TEST_CASE("joint from conditional multiplies by weights") {
  Eigen::MatrixXd rows(2, 2);
  rows << 0.8, 0.2, 0.2, 0.8;
  const auto j = joint_from_conditional(ConditionalMatrix(rows));
  Eigen::MatrixXd want(2, 2);
  want << 0.4, 0.1, 0.1, 0.4;
  CHECK((j.probs() - want).cwiseAbs().maxCoeff() < 1e-15);

  rows << 1, 0, 0, 1;
  const auto d = joint_from_conditional(ConditionalMatrix(rows));
  CHECK(d.probs()(0, 0) == doctest::Approx(0.5));
  CHECK(d.probs()(0, 1) == 0.0);
}

TEST_CASE("label marginal equals column sums") {
  Eigen::MatrixXd rows(3, 2);
  rows << 0.9, 0.1, 0.5, 0.5, 0.3, 0.7;
  Eigen::VectorXd w(3);
  w << 0.2, 0.3, 0.5;
  const ConditionalMatrix c(rows, w);
  const auto j = joint_from_conditional(c);
  CHECK((j.py() - c.label_marginal().probs()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((j.px() - w).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mutual information") {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0, 0, 0.5;
  CHECK(mutual_information(DiscreteJoint(p), LogBase::bits) == doctest::Approx(1.0).epsilon(1e-14));
  p << 0.4, 0.1, 0.1, 0.4;
  CHECK(mutual_information(DiscreteJoint(p), LogBase::bits) == doctest::Approx(1 - hb(0.2)).epsilon(1e-12));
  CHECK(mutual_information(DiscreteJoint(p), LogBase::bits) == doctest::Approx(0.2781).epsilon(1e-4));

  Eigen::VectorXd a(3), b(2);
  a << 0.2, 0.3, 0.5;
  b << 0.6, 0.4;
  CHECK(std::abs(mutual_information(DiscreteJoint(a * b.transpose()))) < 1e-15);
}

TEST_CASE("mutual information bounded by entropies and permutation invariant") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const int nx = 2 + t % 7, ny = 2 + t % 4;
    const DiscreteJoint j(random_joint(rng, nx, ny));
    const double mi = mutual_information(j);
    CHECK(mi >= 0.0);
    CHECK(mi <= std::min(entropy(marginal(j, Axis::x)), entropy(marginal(j, Axis::y))) + 1e-12);

    std::vector<std::size_t> xo(nx), yo(ny);
    std::iota(xo.begin(), xo.end(), 0);
    std::iota(yo.begin(), yo.end(), 0);
    std::shuffle(xo.begin(), xo.end(), rng);
    std::shuffle(yo.begin(), yo.end(), rng);
    CHECK(mutual_information(j.permuted(xo, yo)) == doctest::Approx(mi).epsilon(1e-12));
  }
}

TEST_CASE("conditional round trip") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const DiscreteJoint j(random_joint(rng, 6, 3));
    const auto back = joint_from_conditional(conditional_from_joint(j));
    CHECK((back.probs() - j.probs()).cwiseAbs().maxCoeff() < 1e-12);
  }
  Eigen::MatrixXd p(2, 2);
  p << 0.4, 0.1, 0.1, 0.4;
  const auto c = conditional_from_joint(DiscreteJoint(p));
  CHECK(c.rows()(0, 0) == doctest::Approx(0.8));
  CHECK(c.rows()(1, 1) == doctest::Approx(0.8));
  const auto cy = conditional_from_joint(DiscreteJoint(p), Axis::y);
  CHECK(cy.rows()(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("marginals of a product joint are its factors") {
  Eigen::VectorXd a(3), b(2);
  a << 0.2, 0.3, 0.5;
  b << 0.6, 0.4;
  const DiscreteJoint j(a * b.transpose());
  CHECK((marginal(j, Axis::x).probs() - a).norm() < 1e-15);
  CHECK((marginal(j, Axis::y).probs() - b).norm() < 1e-15);
}

TEST_CASE("validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.6, 0.5, 0.5;
  CHECK_THROWS_AS(ConditionalMatrix{bad}, ValidationError);
  bad << -0.1, 1.1, 0.5, 0.5;
  CHECK_THROWS_AS(ConditionalMatrix{bad}, ValidationError);
  Eigen::MatrixXd ok(2, 2);
  ok << 0.5, 0.5, 0.5, 0.5;
  Eigen::VectorXd w(2);
  w << 1.0, 0.0;
  CHECK_THROWS_AS(ConditionalMatrix(ok, w), ValidationError);
  CHECK_THROWS_AS(DiscreteJoint{ok}, ValidationError);
  CHECK_THROWS_AS(Marginal(Eigen::Vector2d(0.3, 0.3)), ValidationError);
}

TEST_CASE("zero-mass rows and columns are pruned") {
  Eigen::MatrixXd p(3, 3);
  p << 0.4, 0.1, 0, 0, 0, 0, 0.1, 0.4, 0;
  const DiscreteJoint j(p);
  CHECK(j.size_x() == 2);
  CHECK(j.size_y() == 2);
  CHECK(j.pruned_rows() == 1);
  CHECK(j.pruned_cols() == 1);
  CHECK(j.px().minCoeff() > 0);
}

TEST_CASE("renormalizes within tolerance") {
  Eigen::MatrixXd rows(1, 2);
  rows << 0.5 + 4e-10, 0.5;
  const ConditionalMatrix c(rows);
  CHECK(c.rows().row(0).sum() == doctest::Approx(1.0).epsilon(1e-15));
}
