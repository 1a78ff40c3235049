#include "ibl/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace ibl {
namespace {

Eigen::MatrixXd standardize(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  if (static_cast<std::size_t>(points.cols()) != model.num_inputs()) {
    throw ValidationError("classifier: points have " + std::to_string(points.cols()) +
                          " columns, model expects " + std::to_string(model.num_inputs()));
  }
  // Column-per-example layout for the layer products.
  Eigen::MatrixXd a = points.transpose();
  a.colwise() -= model.input_mean;
  a = model.input_scale.cwiseInverse().asDiagonal() * a;
  return a;
}

// Column-wise softmax, in place.
void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double top = z.col(c).maxCoeff();
    z.col(c) = (z.col(c).array() - top).exp();
    z.col(c) /= z.col(c).sum();
  }
}

struct Forward {
  std::vector<Eigen::MatrixXd> activations;  // activations[0] = standardized input
  std::vector<Eigen::MatrixXd> pre;          // pre-activations per layer
};

Forward forward(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  Forward f;
  f.activations.push_back(standardize(model, points));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    Eigen::MatrixXd z = model.weights[l] * f.activations.back();
    z.colwise() += model.biases[l];
    f.pre.push_back(z);
    if (l + 1 < model.weights.size()) z = z.cwiseMax(0.0);
    f.activations.push_back(std::move(z));
  }
  return f;
}

double mean_cross_entropy(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                          const std::vector<std::size_t>& labels) {
  Eigen::MatrixXd p = forward(model, points).activations.back();
  double loss = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double top = p.col(c).maxCoeff();
    const double lse = top + std::log((p.col(c).array() - top).exp().sum());
    loss += lse - p(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(c)]), c);
  }
  return loss / static_cast<double>(p.cols());
}

}  // namespace

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) = weights[l].reshaped();
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

void MlpModel::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  if (static_cast<std::size_t>(flat.size()) != num_parameters()) {
    throw ValidationError("classifier: parameter vector has the wrong length");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l].reshaped() = flat.segment(at, weights[l].size());
    at += weights[l].size();
    biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
}

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw ValidationError("classifier: need input and output layers");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw ValidationError("classifier: layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (static_cast<std::size_t>(weights[l].rows()) != layer_sizes[l + 1] ||
        static_cast<std::size_t>(weights[l].cols()) != layer_sizes[l] ||
        static_cast<std::size_t>(biases[l].size()) != layer_sizes[l + 1]) {
      throw ValidationError("classifier: weight shape does not match layer sizes");
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ValidationError("classifier: non-finite parameters");
    }
  }
  if (static_cast<std::size_t>(input_mean.size()) != layer_sizes.front() ||
      static_cast<std::size_t>(input_scale.size()) != layer_sizes.front() ||
      (input_scale.array() <= 0.0).any()) {
    throw ValidationError("classifier: bad input standardization");
  }
}

MlpModel init_model(std::size_t inputs, std::size_t classes, const TrainConfig& config) {
  if (classes < 2) throw ValidationError("classifier: need at least 2 classes");
  MlpModel m;
  m.config = config;
  m.layer_sizes.push_back(inputs);
  for (auto h : config.hidden) m.layer_sizes.push_back(h);
  m.layer_sizes.push_back(classes);
  std::mt19937_64 rng(config.seed);
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const auto fan_in = m.layer_sizes[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(static_cast<Eigen::Index>(m.layer_sizes[l + 1]), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.layer_sizes[l + 1])));
  }
  m.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(inputs));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(inputs));
  return m;
}

Eigen::MatrixXd logits(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  return forward(model, points).activations.back().transpose();
}

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                               const std::vector<std::size_t>& labels) {
  if (labels.size() != static_cast<std::size_t>(points.rows()) || labels.empty()) {
    throw ValidationError("classifier: label count does not match point count");
  }
  Forward f = forward(model, points);
  const auto batch = static_cast<double>(labels.size());
  Eigen::MatrixXd delta = f.activations.back();
  LossGradient out;
  for (Eigen::Index c = 0; c < delta.cols(); ++c) {
    const double top = delta.col(c).maxCoeff();
    const double lse = top + std::log((delta.col(c).array() - top).exp().sum());
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(c)]);
    if (y >= delta.rows()) throw ValidationError("classifier: label out of range");
    out.loss += lse - delta(y, c);
  }
  out.loss /= batch;
  softmax_columns(delta);
  for (Eigen::Index c = 0; c < delta.cols(); ++c) {
    delta(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(c)]), c) -= 1.0;
  }
  delta /= batch;

  std::vector<Eigen::MatrixXd> grad_w(model.weights.size());
  std::vector<Eigen::VectorXd> grad_b(model.weights.size());
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    grad_w[l] = delta * f.activations[l].transpose();
    grad_b[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = model.weights[l].transpose() * delta;
      delta = delta.cwiseProduct((f.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  out.gradient.resize(static_cast<Eigen::Index>(model.num_parameters()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < grad_w.size(); ++l) {
    out.gradient.segment(at, grad_w[l].size()) = grad_w[l].reshaped();
    at += grad_w[l].size();
    out.gradient.segment(at, grad_b[l].size()) = grad_b[l];
    at += grad_b[l].size();
  }
  return out;
}

MlpModel fit(const SampleSet& samples, const TrainConfig& config) {
  if (samples.size() == 0) throw ValidationError("classifier: no training samples");
  const std::set<std::size_t> present(samples.observed_labels.begin(), samples.observed_labels.end());
  if (present.size() < 2) throw ValidationError("classifier: training data contains a single class");
  if (config.batch_size == 0) throw ValidationError("classifier: batch size must be positive");
  const std::size_t classes = *present.rbegin() + 1;

  MlpModel model = init_model(2, classes, config);
  const Eigen::MatrixXd x = samples.points;
  model.input_mean = x.colwise().mean().transpose();
  model.input_scale = ((x.rowwise() - model.input_mean.transpose()).cwiseAbs2().colwise().mean().transpose())
                          .cwiseSqrt()
                          .cwiseMax(1e-12);
  model.loss_history.push_back(mean_cross_entropy(model, x, samples.observed_labels));

  const auto n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x5bd1e995ULL);

  Eigen::VectorXd theta = model.parameters();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  Eigen::MatrixXd batch_x;
  std::vector<std::size_t> batch_y;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      batch_x.resize(static_cast<Eigen::Index>(len), 2);
      batch_y.resize(len);
      for (std::size_t k = 0; k < len; ++k) {
        batch_x.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(order[start + k]));
        batch_y[k] = samples.observed_labels[order[start + k]];
      }
      const LossGradient lg = loss_and_gradient(model, batch_x, batch_y);
      ++step;
      m1 = b1 * m1 + (1.0 - b1) * lg.gradient;
      m2 = b2 * m2 + (1.0 - b2) * lg.gradient.cwiseAbs2();
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
      theta.array() -= config.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
      model.set_parameters(theta);
    }
    model.loss_history.push_back(mean_cross_entropy(model, x, samples.observed_labels));
  }
  return model;
}

ConditionalMatrix predict_proba(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  Eigen::MatrixXd p = forward(model, points).activations.back();
  softmax_columns(p);
  return ConditionalMatrix(p.transpose());
}

}  // namespace ibl
