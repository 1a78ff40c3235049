#pragma once

// Small fully connected ReLU network giving a learned p(y|x) for points in
// the plane, trained with mini-batch Adam on mean cross-entropy.

#include <cstdint>
#include <vector>

#include "ibl/dist.hpp"
#include "ibl/synth.hpp"

namespace ibl {

struct TrainConfig {
  std::vector<std::size_t> hidden{32};
  double learning_rate = 3e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 512;
  std::uint64_t seed = 0;
};

struct MlpModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., classes
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_mean;            // standardization applied before the first layer
  Eigen::VectorXd input_scale;
  TrainConfig config;
  std::vector<double> loss_history;      // mean cross-entropy at init and after each epoch

  std::size_t num_inputs() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_parameters() const;
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& flat);
  /// Throws ValidationError on inconsistent shapes or non-finite values.
  void validate() const;
};

/// Random fan-in scaled uniform weights, zero biases, identity standardization.
MlpModel init_model(std::size_t inputs, std::size_t classes, const TrainConfig& config);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as MlpModel::parameters()
};

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points,
                               const std::vector<std::size_t>& labels);

Eigen::MatrixXd logits(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points);

MlpModel fit(const SampleSet& samples, const TrainConfig& config = {});

ConditionalMatrix predict_proba(const MlpModel& model, const Eigen::Ref<const Eigen::MatrixXd>& points);

}  // namespace ibl
