#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ibl/estimators.hpp"

using namespace ibl;

namespace {

Eigen::MatrixXd rows_of(std::initializer_list<std::initializer_list<double>> init) {
  Eigen::MatrixXd m(init.size(), init.begin()->size());
  int i = 0;
  for (auto r : init) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

ConditionalMatrix random_cond(std::mt19937_64& rng, int n, int c, bool weighted = false) {
  std::gamma_distribution<double> g(0.7, 1.0);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Eigen::MatrixXd rows(n, c);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < c; ++j) rows(i, j) = g(rng) + 1e-3;
    rows.row(i) /= rows.row(i).sum();
    w[i] = weighted ? u(rng) : 1.0;
  }
  return ConditionalMatrix(rows, w / w.sum());
}

DiscreteJoint random_joint(std::mt19937_64& rng, int nx, int ny) {
  std::gamma_distribution<double> g(0.7, 1.0);
  Eigen::MatrixXd p(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) p(i, j) = g(rng) + 1e-4;
  return DiscreteJoint(p / p.sum());
}

// Textbook evaluation of (1/p(O) - 1) / (sum_y p(y|O)^2 / p(y) - 1).
double oracle_beta(const ConditionalMatrix& c, const std::vector<std::size_t>& omega) {
  const int classes = static_cast<int>(c.num_classes());
  std::vector<double> py(classes, 0.0), pyo(classes, 0.0);
  double po = 0.0;
  for (std::size_t i = 0; i < c.num_examples(); ++i)
    for (int j = 0; j < classes; ++j) py[j] += c.weights()[i] * c.rows()(i, j);
  for (auto i : omega) {
    po += c.weights()[i];
    for (int j = 0; j < classes; ++j) pyo[j] += c.weights()[i] * c.rows()(i, j);
  }
  double s = 0.0;
  for (int j = 0; j < classes; ++j) s += (pyo[j] / po) * (pyo[j] / po) / py[j];
  return (1.0 / po - 1.0) / (s - 1.0);
}

struct OracleResult {
  double beta = std::numeric_limits<double>::infinity();
  double beta_lib = std::numeric_limits<double>::infinity();
};

// Every prefix of every pivot-sorted order.
OracleResult prefix_oracle(const ConditionalMatrix& c) {
  OracleResult best;
  const std::size_t n = c.num_examples();
  for (std::size_t j = 0; j < c.num_classes(); ++j) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return c.rows()(a, j) > c.rows()(b, j); });
    for (std::size_t k = 1; k < n; ++k) {
      std::vector<std::size_t> omega(order.begin(), order.begin() + k);
      const double v = oracle_beta(c, omega);
      if (std::isfinite(v) && v > 0 && v < best.beta) best.beta = v;
      try {
        best.beta_lib = std::min(best.beta_lib, get_beta(c, omega));
      } catch (const UninformativeSubsetError&) {
      }
    }
  }
  return best;
}

double centered_var(const DiscreteJoint& j, const Eigen::VectorXd& h) {
  const double m = j.px().dot(h);
  return j.px().dot((h.array() - m).square().matrix());
}

}  // namespace

TEST_CASE("get_beta hand examples") {
  const ConditionalMatrix det(rows_of({{1, 0}, {1, 0}, {0, 1}, {0, 1}}));
  const std::vector<std::size_t> half{0, 1};
  CHECK(get_beta(det, half) == doctest::Approx(1.0).epsilon(1e-14));

  const ConditionalMatrix noisy(rows_of({{.8, .2}, {.8, .2}, {.2, .8}, {.2, .8}}));
  CHECK(get_beta(noisy, half) == doctest::Approx(1.0 / 0.36).epsilon(1e-12));
  CHECK(get_beta(noisy, half) == doctest::Approx(2.7778).epsilon(1e-4));

  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK_THROWS_AS(get_beta(noisy, all), UninformativeSubsetError);
  const std::vector<std::size_t> dup{0, 0};
  CHECK_THROWS_AS(get_beta(noisy, dup), ValidationError);
}

TEST_CASE("subset_search examples") {
  const ConditionalMatrix noisy(rows_of({{.8, .2}, {.8, .2}, {.2, .8}, {.2, .8}}));
  const auto r = subset_search(noisy);
  CHECK(r.beta0 == doctest::Approx(1.0 / 0.36).epsilon(1e-12));
  CHECK(r.member_indices.size() == 2);
  CHECK(r.p_omega == doctest::Approx(0.5));

  const ConditionalMatrix diag(rows_of({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  // One class of three: (1/(1/3) - 1) / (1/(1/3) - 1) = 1.
  CHECK(subset_search(diag).beta0 == doctest::Approx(1.0).epsilon(1e-12));

  const ConditionalMatrix same(rows_of({{.3, .7}, {.3, .7}, {.3, .7}}));
  CHECK_THROWS_AS(subset_search(same), IndependenceError);
}

TEST_CASE("subset_search equals the exhaustive prefix oracle for N <= 12") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 11, c = 2 + t % 3;
    const auto cond = random_cond(rng, n, c, t % 2 == 1);
    const auto oracle = prefix_oracle(cond);
    const auto r = subset_search(cond);
    CHECK(r.beta0 == oracle.beta_lib);
    CHECK(r.beta0 == doctest::Approx(oracle.beta).epsilon(1e-12));
    CHECK(get_beta(cond, r.member_indices) == doctest::Approx(r.beta0).epsilon(1e-12));
    CHECK(r.member_indices.size() < static_cast<std::size_t>(n));
    CHECK(r.beta0 > 1.0);
  }
}

TEST_CASE("range family and narrowing are bounded by the exhaustive search") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 60; ++t) {
    const auto cond = random_cond(rng, 40, 3);
    SubsetSearchOptions o;
    const double prefix = subset_search(cond, o).beta0;
    o.family = SubsetFamily::range;
    const double range = subset_search(cond, o).beta0;
    CHECK(range <= prefix);
    o.strategy = SearchStrategy::narrowing;
    CHECK(subset_search(cond, o).beta0 >= range);
    o.family = SubsetFamily::prefix;
    CHECK(subset_search(cond, o).beta0 >= prefix);
    o.execution = Execution::serial;
    o.strategy = SearchStrategy::exhaustive;
    CHECK(subset_search(cond, o).beta0 == prefix);
  }
}

TEST_CASE("class-conditional closed form") {
  const Eigen::Vector2d uniform(0.5, 0.5);
  for (auto [rho, want] : {std::pair{0.2, 2.78}, {0.3, 6.25}, {0.4, 25.0}, {0.48, 625.0}}) {
    Eigen::MatrixXd flip(2, 2);
    flip << 1 - rho, rho, rho, 1 - rho;
    const auto e = corollary_class_conditional(flip, Marginal(uniform));
    CHECK(e.value == doctest::Approx(want).epsilon(0.005));
    CHECK(e.value == doctest::Approx(1.0 / ((1 - 2 * rho) * (1 - 2 * rho))).epsilon(1e-12));
    CHECK(binary_symmetric_beta0(rho) == doctest::Approx(e.value).epsilon(1e-12));
  }
  const auto id = corollary_class_conditional(Eigen::MatrixXd::Identity(3, 3), Marginal(Eigen::Vector3d(.2, .3, .5)));
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::MatrixXd flat(2, 2);
  flat << .5, .5, .5, .5;
  CHECK_THROWS_AS(corollary_class_conditional(flat, Marginal(uniform)), IndependenceError);
}

TEST_CASE("subset_search agrees with the closed form on class-conditional rows") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    std::gamma_distribution<double> g(1.0, 1.0);
    const int cs = 2, c = 2 + t % 3;
    Eigen::MatrixXd noise(cs, c);
    Eigen::VectorXd prior(cs);
    for (int a = 0; a < cs; ++a) {
      for (int b = 0; b < c; ++b) noise(a, b) = g(rng) + 0.05;
      noise.row(a) /= noise.row(a).sum();
      prior[a] = g(rng) + 0.1;
    }
    prior /= prior.sum();
    const auto corollary = corollary_class_conditional(noise, Marginal(prior)).value;
    const auto search = subset_search(ConditionalMatrix(noise, prior)).beta0;
    CHECK(search == doctest::Approx(corollary).epsilon(1e-12));
  }
}

TEST_CASE("functional examples and invariances") {
  DiscreteJoint two(rows_of({{.4, .1}, {.1, .4}}));
  CHECK(beta0_functional(two, Eigen::Vector2d(1, 0)) == doctest::Approx(0.25 / 0.09).epsilon(1e-12));
  CHECK_THROWS_AS(beta0_functional(two, Eigen::Vector2d(3, 3)), InvalidDirectionError);

  std::mt19937_64 rng(14);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    const auto j = random_joint(rng, 3 + t % 8, 2 + t % 4);
    Eigen::VectorXd h(j.size_x());
    for (auto& v : h) v = nd(rng);
    const double b = beta0_functional(j, h);
    CHECK(b > 1.0);
    const double a = nd(rng) + (t % 2 ? 3.0 : -3.0);
    const Eigen::VectorXd ah = (a * h).array() + nd(rng);
    CHECK(beta0_functional(j, ah) == doctest::Approx(b).epsilon(1e-10));
    CHECK(centered_var(j, h) > 0);
  }
}

TEST_CASE("indicator functional equals get_beta on every subset") {
  std::mt19937_64 rng(15);
  for (int t = 0; t < 10; ++t) {
    const auto j = random_joint(rng, 6, 2 + t % 3);
    const auto cond = conditional_from_joint(j);
    for (unsigned mask = 1; mask + 1 < (1u << 6); ++mask) {
      Eigen::VectorXd h(6);
      std::vector<std::size_t> omega;
      for (int i = 0; i < 6; ++i) {
        h[i] = (mask >> i) & 1u;
        if (h[i] > 0) omega.push_back(i);
      }
      CHECK(beta0_functional(j, h) == doctest::Approx(get_beta(cond, omega)).epsilon(1e-10));
    }
  }
}

TEST_CASE("maximum correlation") {
  const DiscreteJoint two(rows_of({{.4, .1}, {.1, .4}}));
  CHECK(max_correlation(two) == doctest::Approx(0.6).epsilon(1e-12));
  // Binary f and g are fixed up to sign once standardized; check E[fg] directly.
  const Eigen::Vector2d f(1, -1), g(1, -1);
  CHECK(f.transpose() * two.probs() * g == doctest::Approx(0.6).epsilon(1e-12));

  const DiscreteJoint diag(rows_of({{.3, 0}, {0, .7}}));
  CHECK(max_correlation(diag) == doctest::Approx(1.0).epsilon(1e-12));
  const DiscreteJoint prod(Eigen::Vector3d(.2, .3, .5) * Eigen::Vector2d(.6, .4).transpose());
  CHECK(max_correlation(prod) < 1e-7);
  CHECK_THROWS_AS(max_correlation_estimate(prod), IndependenceError);
  CHECK_THROWS_AS(minimize_functional(prod), IndependenceError);

  std::mt19937_64 rng(16);
  for (int t = 0; t < 20; ++t) {
    const auto mc = max_correlation_svd(random_joint(rng, 7, 4));
    CHECK(mc.top_singular == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mc.rho <= 1.0);
  }
}

TEST_CASE("functional minimization reaches the inverse squared maximum correlation") {
  const DiscreteJoint two(rows_of({{.4, .1}, {.1, .4}}));
  CHECK(minimize_functional(two).value == doctest::Approx(1.0 / 0.36).epsilon(1e-9));
  const DiscreteJoint diag(rows_of({{.3, 0}, {0, .7}}));
  CHECK(minimize_functional(diag).value == doctest::Approx(1.0).epsilon(1e-9));

  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const auto j = random_joint(rng, 2 + t % 12, 2 + t % 5);
    const double rho = max_correlation(j);
    FunctionalOptions o;
    o.seed = t;
    const auto est = minimize_functional(j, o);
    CHECK(est.value == doctest::Approx(1.0 / (rho * rho)).epsilon(1e-6));
    REQUIRE(est.h_vector);
    CHECK(beta0_functional(j, *est.h_vector) == doctest::Approx(est.value).epsilon(1e-12));
    // Indicator directions are a sub-family of all directions.
    CHECK(subset_search(conditional_from_joint(j)).beta0 >= est.value * (1 - 1e-6));
  }
}

TEST_CASE("permutation invariance of every estimator") {
  std::mt19937_64 rng(18);
  for (int t = 0; t < 15; ++t) {
    const int nx = 4 + t % 6, ny = 2 + t % 3;
    const auto j = random_joint(rng, nx, ny);
    std::vector<std::size_t> xo(nx), yo(ny);
    std::iota(xo.begin(), xo.end(), 0);
    std::iota(yo.begin(), yo.end(), 0);
    std::shuffle(xo.begin(), xo.end(), rng);
    std::shuffle(yo.begin(), yo.end(), rng);
    const auto p = j.permuted(xo, yo);

    const auto cj = conditional_from_joint(j), cp = conditional_from_joint(p);
    CHECK(subset_search(cp).beta0 == doctest::Approx(subset_search(cj).beta0).epsilon(1e-10));
    SubsetSearchOptions range;
    range.family = SubsetFamily::range;
    CHECK(subset_search(cp, range).beta0 == doctest::Approx(subset_search(cj, range).beta0).epsilon(1e-10));
    CHECK(info_density_estimate(cp).value == doctest::Approx(info_density_estimate(cj).value).epsilon(1e-10));
    CHECK(max_correlation(p) == doctest::Approx(max_correlation(j)).epsilon(1e-10));
    CHECK(minimize_functional(p).value == doctest::Approx(minimize_functional(j).value).epsilon(1e-10));

    Eigen::MatrixXd noise = j.probs().topRows(2);
    for (int r = 0; r < 2; ++r) noise.row(r) /= noise.row(r).sum();
    Eigen::MatrixXd noise_p(2, ny);
    for (int c = 0; c < ny; ++c) noise_p.col(c) = noise.col(yo[c]);
    const Marginal prior(Eigen::Vector2d(.35, .65));
    CHECK(corollary_class_conditional(noise_p, prior).value ==
          doctest::Approx(corollary_class_conditional(noise, prior).value).epsilon(1e-10));
  }
}

TEST_CASE("information density diagnostic") {
  const ConditionalMatrix det(rows_of({{1, 0}, {1, 0}, {0, 1}, {0, 1}}));
  const auto e = info_density_estimate(det);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.diagnostics.at("diagnostic_only") == "true");
  const ConditionalMatrix same(rows_of({{.3, .7}, {.3, .7}}));
  CHECK_THROWS_AS(info_density_estimate(same), IndependenceError);
}

TEST_CASE("onset prediction") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    const auto j = random_joint(rng, 5 + t % 5, 2 + t % 4);
    Eigen::VectorXd h(j.size_x());
    for (auto& v : h) v = nd(rng);
    const Eigen::MatrixXd d = onset_prediction(j, h);
    for (Eigen::Index x = 0; x < d.rows(); ++x) {
      double s = 0.0;
      for (Eigen::Index y = 0; y < d.cols(); ++y) s += d(x, y);
      CHECK(std::abs(s) < 1e-12);
    }
  }
  const DiscreteJoint two(rows_of({{.4, .1}, {.1, .4}}));
  const Eigen::MatrixXd d = onset_prediction(two, Eigen::Vector2d(1, -1) / std::sqrt(2.0));
  CHECK(d(0, 0) > 0);
  CHECK(d(1, 1) > 0);
  CHECK(d(0, 1) < 0);
  CHECK(d(0, 0) == doctest::Approx(-d(1, 0)));
  CHECK(d(0, 0) == doctest::Approx(d(1, 1)));
  CHECK_THROWS_AS(onset_prediction(two, Eigen::Vector2d(2, 2)), InvalidDirectionError);
}
