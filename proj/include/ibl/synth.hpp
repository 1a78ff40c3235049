#pragma once

// Two-dimensional Gaussian mixtures with class-conditional label noise,
// their exact posteriors, and discretization onto a grid.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ibl/dist.hpp"

namespace ibl {

struct MixtureComponent {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> variance{0.25, 0.25};  // diagonal covariance
  double weight = 1.0;
  std::size_t class_id = 0;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
  std::optional<Eigen::MatrixXd> noise;  // noise(true, observed) = p(observed | true)
  std::uint64_t seed = 0;

  std::size_t num_classes() const;
  /// p(y*): total component weight per true class.
  Eigen::VectorXd class_prior() const;
  /// Confusion matrix, identity when no noise is set.
  Eigen::MatrixXd confusion() const;
  /// Throws ValidationError on bad weights, variances or confusion rows.
  void validate() const;
};

/// Two equal-variance components at (-d/2, 0) and (d/2, 0), classes 0 and 1.
MixtureSpec two_component_mixture(double distance, double weight0 = 0.5, double variance = 0.25,
                                  double flip_rate = 0.0, std::uint64_t seed = 0);

/// 2x2 symmetric confusion matrix with flip rate rho.
Eigen::MatrixXd symmetric_flip(double rho, std::size_t classes = 2);

struct SampleSet {
  Eigen::MatrixX2d points;  // N x 2
  std::vector<std::size_t> observed_labels;
  std::vector<std::size_t> true_labels;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

SampleSet sample(const MixtureSpec& spec, std::size_t n);

/// Exact p(y|x) at each point: confusion composed with the Bayes posterior of the true class.
ConditionalMatrix analytic_posterior(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixX2d>& points);

struct GridRange {
  double lo[2];
  double hi[2];
};

struct DiscretizeOptions {
  std::size_t bins_per_axis = 32;
  std::optional<GridRange> range;  // default: 4 standard deviations past the extreme means
};

GridRange default_range(const MixtureSpec& spec);

/// Joint of (grid cell, observed label) from sample counts. Points outside the range are dropped.
DiscreteJoint discretize(const SampleSet& samples, const DiscretizeOptions& options, std::size_t num_classes);

/// Joint of (grid cell, observed label) from exact cell masses, conditioned on the range.
DiscreteJoint discretize_exact(const MixtureSpec& spec, const DiscretizeOptions& options = {});

}  // namespace ibl
