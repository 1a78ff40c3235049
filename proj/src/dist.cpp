#include "ibl/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ibl {
namespace {

std::vector<std::string> index_labels(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::to_string(i);
  return out;
}

void check_entries(const Eigen::MatrixXd& m, const char* what) {
  if (m.size() == 0) throw ValidationError(std::string(what) + ": empty table");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        std::ostringstream os;
        os << what << ": entry (" << i << "," << j << ") = " << v << " is not a probability";
        throw ValidationError(os.str());
      }
    }
  }
}

void check_order(std::span<const std::size_t> order, std::size_t n, const char* what) {
  if (order.size() != n) throw ValidationError(std::string(what) + ": permutation size mismatch");
  std::vector<bool> seen(n, false);
  for (auto i : order) {
    if (i >= n || seen[i]) throw ValidationError(std::string(what) + ": not a permutation");
    seen[i] = true;
  }
}

Eigen::VectorXd uniform_weights(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
}

}  // namespace

Marginal::Marginal(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  check_entries(probs_, "marginal");
  const double total = probs_.sum();
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw ValidationError("marginal: probabilities sum to " + std::to_string(total));
  }
  probs_ /= total;
}

ConditionalMatrix::ConditionalMatrix(Eigen::MatrixXd rows, std::vector<std::string> class_names)
    : ConditionalMatrix(rows, uniform_weights(rows.rows()), std::move(class_names)) {}

ConditionalMatrix::ConditionalMatrix(Eigen::MatrixXd rows, Eigen::VectorXd weights,
                                     std::vector<std::string> class_names)
    : rows_(std::move(rows)), weights_(std::move(weights)), class_names_(std::move(class_names)) {
  check_entries(rows_, "conditional");
  if (weights_.size() != rows_.rows()) {
    throw ValidationError("conditional: weight count does not match row count");
  }
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    const double s = rows_.row(i).sum();
    if (std::abs(s - 1.0) > kStochasticTolerance) {
      std::ostringstream os;
      os << "conditional: row " << i << " sums to " << s;
      throw ValidationError(os.str());
    }
    rows_.row(i) /= s;
  }
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!std::isfinite(weights_[i]) || weights_[i] <= 0.0) {
      throw ValidationError("conditional: example weights must be positive");
    }
  }
  const double wsum = weights_.sum();
  if (std::abs(wsum - 1.0) > kStochasticTolerance) {
    throw ValidationError("conditional: weights sum to " + std::to_string(wsum));
  }
  weights_ /= wsum;
  if (class_names_.empty()) class_names_ = index_labels(num_classes());
  if (class_names_.size() != num_classes()) {
    throw ValidationError("conditional: class name count does not match column count");
  }
}

bool ConditionalMatrix::has_uniform_weights() const {
  const double u = 1.0 / static_cast<double>(num_examples());
  return (weights_.array() - u).abs().maxCoeff() <= 1e-15;
}

Marginal ConditionalMatrix::label_marginal() const {
  Eigen::VectorXd py = rows_.transpose() * weights_;
  return Marginal(py / py.sum());
}

ConditionalMatrix ConditionalMatrix::permuted(std::span<const std::size_t> example_order,
                                              std::span<const std::size_t> class_order) const {
  check_order(example_order, num_examples(), "conditional");
  check_order(class_order, num_classes(), "conditional");
  Eigen::MatrixXd r(rows_.rows(), rows_.cols());
  Eigen::VectorXd w(weights_.size());
  std::vector<std::string> names(class_names_.size());
  for (std::size_t i = 0; i < example_order.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(example_order[i]);
    w[static_cast<Eigen::Index>(i)] = weights_[src];
    for (std::size_t j = 0; j < class_order.size(); ++j) {
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows_(src, static_cast<Eigen::Index>(class_order[j]));
    }
  }
  for (std::size_t j = 0; j < class_order.size(); ++j) names[j] = class_names_[class_order[j]];
  return ConditionalMatrix(std::move(r), std::move(w), std::move(names));
}

DiscreteJoint::DiscreteJoint(Eigen::MatrixXd probs, std::vector<std::string> x_labels,
                             std::vector<std::string> y_labels) {
  check_entries(probs, "joint");
  const double total = probs.sum();
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw ValidationError("joint: probabilities sum to " + std::to_string(total));
  }
  if (x_labels.empty()) x_labels = index_labels(static_cast<std::size_t>(probs.rows()));
  if (y_labels.empty()) y_labels = index_labels(static_cast<std::size_t>(probs.cols()));
  if (x_labels.size() != static_cast<std::size_t>(probs.rows()) ||
      y_labels.size() != static_cast<std::size_t>(probs.cols())) {
    throw ValidationError("joint: label count does not match table shape");
  }

  std::vector<Eigen::Index> keep_rows, keep_cols;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (probs.row(i).sum() >= std::numeric_limits<double>::min()) keep_rows.push_back(i);
  }
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    if (probs.col(j).sum() >= std::numeric_limits<double>::min()) keep_cols.push_back(j);
  }
  pruned_rows_ = static_cast<std::size_t>(probs.rows()) - keep_rows.size();
  pruned_cols_ = static_cast<std::size_t>(probs.cols()) - keep_cols.size();
  if (keep_rows.empty() || keep_cols.empty()) throw ValidationError("joint: no row carries mass");

  probs_.resize(static_cast<Eigen::Index>(keep_rows.size()),
                static_cast<Eigen::Index>(keep_cols.size()));
  for (std::size_t i = 0; i < keep_rows.size(); ++i) {
    x_labels_.push_back(x_labels[static_cast<std::size_t>(keep_rows[i])]);
    for (std::size_t j = 0; j < keep_cols.size(); ++j) {
      probs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          probs(keep_rows[i], keep_cols[j]);
    }
  }
  for (auto j : keep_cols) y_labels_.push_back(y_labels[static_cast<std::size_t>(j)]);

  probs_ /= total;
  px_ = probs_.rowwise().sum();
  py_ = probs_.colwise().sum().transpose();
}

DiscreteJoint DiscreteJoint::permuted(std::span<const std::size_t> x_order,
                                      std::span<const std::size_t> y_order) const {
  check_order(x_order, size_x(), "joint");
  check_order(y_order, size_y(), "joint");
  Eigen::MatrixXd p(probs_.rows(), probs_.cols());
  std::vector<std::string> xl(x_order.size()), yl(y_order.size());
  for (std::size_t i = 0; i < x_order.size(); ++i) {
    xl[i] = x_labels_[x_order[i]];
    for (std::size_t j = 0; j < y_order.size(); ++j) {
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          probs_(static_cast<Eigen::Index>(x_order[i]), static_cast<Eigen::Index>(y_order[j]));
    }
  }
  for (std::size_t j = 0; j < y_order.size(); ++j) yl[j] = y_labels_[y_order[j]];
  return DiscreteJoint(std::move(p), std::move(xl), std::move(yl));
}

DiscreteJoint DiscreteJoint::transposed() const {
  return DiscreteJoint(probs_.transpose(), y_labels_, x_labels_);
}

DiscreteJoint joint_from_conditional(const ConditionalMatrix& cond) {
  Eigen::MatrixXd p = cond.weights().asDiagonal() * cond.rows();
  std::vector<std::string> xl(cond.num_examples());
  for (std::size_t i = 0; i < xl.size(); ++i) xl[i] = std::to_string(i);
  return DiscreteJoint(std::move(p), std::move(xl), cond.class_names());
}

ConditionalMatrix conditional_from_joint(const DiscreteJoint& joint, Axis given) {
  if (given == Axis::y) return conditional_from_joint(joint.transposed(), Axis::x);
  Eigen::MatrixXd rows = joint.px().cwiseInverse().asDiagonal() * joint.probs();
  return ConditionalMatrix(std::move(rows), joint.px(), joint.y_labels());
}

Marginal marginal(const DiscreteJoint& joint, Axis axis) {
  return Marginal(axis == Axis::x ? joint.px() : joint.py());
}

double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

double entropy(const Eigen::Ref<const Eigen::VectorXd>& probs, LogBase base) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
  }
  return base == LogBase::bits ? nats_to_bits(h) : h;
}

double entropy(const Marginal& m, LogBase base) { return entropy(m.probs(), base); }

double mutual_information(const Eigen::Ref<const Eigen::MatrixXd>& probs, LogBase base) {
  const Eigen::VectorXd px = probs.rowwise().sum();
  const Eigen::VectorXd py = probs.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double p = probs(i, j);
      if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
    }
  }
  mi = std::max(mi, 0.0);
  return base == LogBase::bits ? nats_to_bits(mi) : mi;
}

double mutual_information(const DiscreteJoint& joint, LogBase base) {
  return mutual_information(joint.probs(), base);
}

}  // namespace ibl
