#pragma once

// Discrete probability containers over finite alphabets.
//
// All containers validate on construction and are immutable afterwards.
// Probabilities are stored as doubles; entropies and informations are in nats
// unless a LogBase of bits is requested.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ibl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-stochastic tables, bad shapes, unparsable files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// X and Y carry no information about each other, so no finite beta learns.
class IndependenceError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kStochasticTolerance = 1e-9;

enum class LogBase { nats, bits };
enum class Axis { x, y };

class Marginal {
 public:
  Marginal() = default;
  explicit Marginal(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }
  double operator[](std::size_t i) const { return probs_[static_cast<Eigen::Index>(i)]; }

 private:
  Eigen::VectorXd probs_;
};

/// Row-stochastic table p(y|x_i) with example weights p(x_i).
class ConditionalMatrix {
 public:
  ConditionalMatrix() = default;
  /// Uniform weights 1/N.
  explicit ConditionalMatrix(Eigen::MatrixXd rows, std::vector<std::string> class_names = {});
  ConditionalMatrix(Eigen::MatrixXd rows, Eigen::VectorXd weights,
                    std::vector<std::string> class_names = {});

  const Eigen::MatrixXd& rows() const { return rows_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t num_examples() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(rows_.cols()); }
  bool has_uniform_weights() const;

  /// p(y) = sum_i w_i p(y|x_i).
  Marginal label_marginal() const;

  ConditionalMatrix permuted(std::span<const std::size_t> example_order,
                             std::span<const std::size_t> class_order) const;

 private:
  Eigen::MatrixXd rows_;
  Eigen::VectorXd weights_;
  std::vector<std::string> class_names_;
};

/// Full joint table p(x,y). Rows index X, columns index Y.
///
/// Rows or columns with exactly zero mass are pruned at construction; the
/// number dropped is kept so callers can surface a warning.
class DiscreteJoint {
 public:
  DiscreteJoint() = default;
  explicit DiscreteJoint(Eigen::MatrixXd probs, std::vector<std::string> x_labels = {},
                         std::vector<std::string> y_labels = {});

  const Eigen::MatrixXd& probs() const { return probs_; }
  std::size_t size_x() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t size_y() const { return static_cast<std::size_t>(probs_.cols()); }
  const std::vector<std::string>& x_labels() const { return x_labels_; }
  const std::vector<std::string>& y_labels() const { return y_labels_; }
  const Eigen::VectorXd& px() const { return px_; }
  const Eigen::VectorXd& py() const { return py_; }
  std::size_t pruned_rows() const { return pruned_rows_; }
  std::size_t pruned_cols() const { return pruned_cols_; }

  DiscreteJoint permuted(std::span<const std::size_t> x_order,
                         std::span<const std::size_t> y_order) const;
  DiscreteJoint transposed() const;

 private:
  Eigen::MatrixXd probs_;
  Eigen::VectorXd px_;
  Eigen::VectorXd py_;
  std::vector<std::string> x_labels_;
  std::vector<std::string> y_labels_;
  std::size_t pruned_rows_ = 0;
  std::size_t pruned_cols_ = 0;
};

DiscreteJoint joint_from_conditional(const ConditionalMatrix& cond);

/// Axis::x gives p(y|x) weighted by p(x); Axis::y gives p(x|y) weighted by p(y).
ConditionalMatrix conditional_from_joint(const DiscreteJoint& joint, Axis given = Axis::x);

Marginal marginal(const DiscreteJoint& joint, Axis axis);

double entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, LogBase base = LogBase::nats);
double entropy(const Marginal& m, LogBase base = LogBase::nats);

/// sum p(x,y) log[p(x,y) / (p(x)p(y))], with 0 log 0 = 0. Clamped at 0.
double mutual_information(const DiscreteJoint& joint, LogBase base = LogBase::nats);

/// Same as above for a raw non-negative table that sums to 1; rows/columns may be empty.
double mutual_information(const Eigen::Ref<const Eigen::MatrixXd>& probs,
                          LogBase base = LogBase::nats);

double nats_to_bits(double nats);

}  // namespace ibl
