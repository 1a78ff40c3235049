#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ibl/classifier.hpp"
#include "ibl/synth.hpp"

using namespace ibl;

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 10; ++t) {
    TrainConfig cfg;
    cfg.hidden = t % 2 ? std::vector<std::size_t>{6} : std::vector<std::size_t>{5, 4};
    cfg.seed = t;
    const std::size_t classes = 2 + t % 3;
    MlpModel m = init_model(2, classes, cfg);
    Eigen::MatrixXd pts(12, 2);
    for (auto& v : pts.reshaped()) v = nd(rng);
    std::vector<std::size_t> labels(12);
    for (std::size_t i = 0; i < 12; ++i) labels[i] = i % classes;

    const auto lg = loss_and_gradient(m, pts, labels);
    const Eigen::VectorXd theta = m.parameters();
    Eigen::VectorXd numeric(theta.size());
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      m.set_parameters(tp);
      const double lp = loss_and_gradient(m, pts, labels).loss;
      m.set_parameters(tm);
      const double lm = loss_and_gradient(m, pts, labels).loss;
      numeric[k] = (lp - lm) / (2 * h);
    }
    m.set_parameters(theta);
    const double rel = (lg.gradient - numeric).norm() / std::max(1e-12, (lg.gradient + numeric).norm());
    CHECK(rel < 1e-5);
  }
}

TEST_CASE("separable clusters are learned") {
  const auto spec = two_component_mixture(6.0, 0.5, 0.25, 0.0, 3);
  const auto data = sample(spec, 2000);
  TrainConfig cfg;
  cfg.seed = 4;
  const auto model = fit(data, cfg);
  const auto proba = predict_proba(model, data.points);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Eigen::Index arg;
    proba.rows().row(i).maxCoeff(&arg);
    correct += static_cast<std::size_t>(arg) == data.observed_labels[i];
  }
  CHECK(static_cast<double>(correct) / data.size() > 0.99);
  CHECK(model.loss_history.back() <= model.loss_history.front());
  CHECK((proba.rows().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("noisy labels give the noisy posterior at cluster cores") {
  const auto spec = two_component_mixture(16.0, 0.5, 0.25, 0.2, 5);
  const auto data = sample(spec, 10000);
  TrainConfig cfg;
  cfg.seed = 6;
  const auto model = fit(data, cfg);
  Eigen::MatrixXd cores(2, 2);
  cores << -8, 0, 8, 0;
  const auto p = predict_proba(model, cores);
  CHECK(p.rows()(0, 0) == doctest::Approx(0.8).epsilon(0.05 / 0.8));
  CHECK(p.rows()(1, 1) == doctest::Approx(0.8).epsilon(0.05 / 0.8));
}

TEST_CASE("training is deterministic and zero epochs leave the model at init") {
  const auto data = sample(two_component_mixture(2.0, 0.5, 0.25, 0.1, 7), 500);
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.epochs = 3;
  CHECK(fit(data, cfg).parameters() == fit(data, cfg).parameters());
  cfg.epochs = 0;
  CHECK(fit(data, cfg).parameters() == init_model(2, 2, cfg).parameters());
}

TEST_CASE("symmetric weights give symmetric rows") {
  TrainConfig cfg;
  cfg.hidden = {4};
  MlpModel m = init_model(2, 2, cfg);
  m.input_mean.setZero();
  m.input_scale.setOnes();
  // Hidden unit k sees x1 with weight +-1 in pairs; output 1 is output 0 with swapped pairs.
  m.weights[0] << 1, 0, -1, 0, 2, 1, -2, 1;
  m.biases[0].setZero();
  m.weights[1] << 1, 0, 3, 0, 0, 1, 0, 3;
  m.biases[1].setZero();
  Eigen::MatrixXd pts(2, 2);
  pts << 0.7, 0.3, -0.7, 0.3;
  const auto p = predict_proba(m, pts);
  CHECK(p.rows()(0, 0) == doctest::Approx(p.rows()(1, 1)).epsilon(1e-14));
}

TEST_CASE("errors") {
  SampleSet one{Eigen::MatrixX2d::Zero(3, 2), {1, 1, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(fit(one), ValidationError);
  const auto m = init_model(2, 2, TrainConfig{});
  CHECK_THROWS_AS(predict_proba(m, Eigen::MatrixXd::Zero(3, 3)), ValidationError);
}
