#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "ibl/estimators.hpp"
#include "ibl/synth.hpp"

using namespace ibl;

namespace {

double hb(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

std::map<std::string, double> mass_by_cell(const DiscreteJoint& j) {
  std::map<std::string, double> out;
  for (std::size_t x = 0; x < j.size_x(); ++x)
    for (std::size_t y = 0; y < j.size_y(); ++y)
      out[j.x_labels()[x] + "/" + std::to_string(y)] += j.probs()(x, y);
  return out;
}

}  // namespace

TEST_CASE("sampling") {
  const auto clean = two_component_mixture(16.0, 0.5, 0.25, 0.0, 1);
  const auto s = sample(clean, 5000);
  CHECK(s.observed_labels == s.true_labels);
  CHECK(s.size() == 5000);

  const auto noisy = two_component_mixture(16.0, 0.5, 0.25, 0.2, 2);
  const auto big = sample(noisy, 100000);
  std::size_t flips = 0, wrong_side = 0;
  for (std::size_t i = 0; i < big.size(); ++i) {
    flips += big.observed_labels[i] != big.true_labels[i];
    // Components sit at (-8, 0) and (8, 0): the nearest mean is the sign of x1.
    wrong_side += (big.points(i, 0) > 0) != (big.true_labels[i] == 1);
  }
  CHECK(static_cast<double>(flips) / big.size() == doctest::Approx(0.2).epsilon(0.05));
  CHECK(wrong_side == 0);

  const auto again = sample(noisy, 100000);
  CHECK(again.points == big.points);
  CHECK(again.observed_labels == big.observed_labels);
}

TEST_CASE("mixture validation") {
  auto spec = two_component_mixture(4.0);
  spec.components[0].weight = 0.9;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = two_component_mixture(4.0);
  spec.components[1].variance[0] = 0.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  CHECK_THROWS_AS(two_component_mixture(4.0, 0.5, 0.25, 1.5), ValidationError);
}

TEST_CASE("analytic posterior") {
  const auto noisy = two_component_mixture(16.0, 0.5, 0.25, 0.2);
  Eigen::MatrixX2d pts(4, 2);
  pts << -8, 0, 8, 0, 0, 0, -300, 5;
  const auto post = analytic_posterior(noisy, pts);
  CHECK(post.rows()(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(post.rows()(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(post.rows()(2, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post.rows()(3, 0) == doctest::Approx(0.8).epsilon(1e-12));

  const auto clean = two_component_mixture(16.0);
  const auto hard = analytic_posterior(clean, pts);
  CHECK(hard.rows()(0, 0) == 1.0);
  CHECK(hard.rows()(1, 1) == 1.0);
  CHECK(hard.rows()(3, 0) == 1.0);
}

TEST_CASE("exact discretization") {
  const auto noisy = two_component_mixture(16.0, 0.5, 0.25, 0.2);
  const auto j = discretize_exact(noisy);
  CHECK(mutual_information(j, LogBase::bits) == doctest::Approx(1 - hb(0.2)).epsilon(1e-3));
  CHECK(j.size_y() == 2);

  for (double rho : {0.1, 0.2, 0.3, 0.4}) {
    const auto jj = discretize_exact(two_component_mixture(16.0, 0.5, 0.25, rho));
    const double want = 1.0 / ((1 - 2 * rho) * (1 - 2 * rho));
    CHECK(subset_search(conditional_from_joint(jj)).beta0 == doctest::Approx(want).epsilon(0.01));
  }
}

TEST_CASE("sample mode agrees with exact mode") {
  const auto spec = two_component_mixture(3.0, 0.6, 0.25, 0.1, 4);
  DiscretizeOptions opt;
  opt.bins_per_axis = 16;
  opt.range = default_range(spec);
  const auto exact = mass_by_cell(discretize_exact(spec, opt));
  const auto counted = mass_by_cell(discretize(sample(spec, 1000000), opt, 2));
  double tv = 0.0;
  for (const auto& [k, v] : exact) tv += std::abs(v - (counted.count(k) ? counted.at(k) : 0.0));
  for (const auto& [k, v] : counted)
    if (!exact.count(k)) tv += v;
  CHECK(tv / 2 < 0.01);
}

TEST_CASE("degenerate grids") {
  const auto spec = two_component_mixture(16.0, 0.5, 0.25, 0.2, 5);
  const auto s = sample(spec, 200);
  DiscretizeOptions opt;
  opt.bins_per_axis = 2;
  opt.range = GridRange{{100, 100}, {101, 101}};
  CHECK_THROWS_AS(discretize(s, opt, 2), ValidationError);

  // Everything in one cell: a single-row joint carries no information.
  opt.range = GridRange{{-1000, -1000}, {1000, 1000}};
  Eigen::MatrixX2d pts = Eigen::MatrixX2d::Zero(10, 2);
  SampleSet one{pts, {0, 1, 0, 1, 0, 1, 0, 1, 0, 0}, {0, 1, 0, 1, 0, 1, 0, 1, 0, 0}};
  const auto single = discretize(one, opt, 2);
  CHECK(single.size_x() == 1);
  CHECK_THROWS_AS(max_correlation_estimate(single), IndependenceError);
  CHECK_THROWS_AS(subset_search(conditional_from_joint(single)), Error);
}

TEST_CASE("overlap raises the threshold") {
  double previous = 0.0;
  for (double d : {8.0, 3.2, 1.6, 0.8}) {
    const auto j = discretize_exact(two_component_mixture(d, 0.6));
    const double b = subset_search(conditional_from_joint(j)).beta0;
    CHECK(b > previous);
    previous = b;
  }
}
