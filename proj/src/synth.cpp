#include "ibl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace ibl {
namespace {

// Probability that N(mean, var) falls in [a, b), using the tail that avoids cancellation.
double interval_mass(double a, double b, double mean, double var) {
  const double s = std::sqrt(2.0 * var);
  const double za = (a - mean) / s;
  const double zb = (b - mean) / s;
  if (za >= 0.0) return 0.5 * (std::erfc(za) - std::erfc(zb));
  if (zb <= 0.0) return 0.5 * (std::erfc(-zb) - std::erfc(-za));
  return 1.0 - 0.5 * std::erfc(-za) - 0.5 * std::erfc(zb);
}

std::string cell_label(std::size_t ix, std::size_t iy) {
  return std::to_string(ix) + "_" + std::to_string(iy);
}

void check_grid(const DiscretizeOptions& options, const GridRange& range) {
  if (options.bins_per_axis < 2) throw ValidationError("discretize: need at least 2 bins per axis");
  for (int d = 0; d < 2; ++d) {
    if (!(range.hi[d] > range.lo[d])) throw ValidationError("discretize: empty grid range");
  }
}

}  // namespace

std::size_t MixtureSpec::num_classes() const {
  std::size_t c = 0;
  for (const auto& comp : components) c = std::max(c, comp.class_id + 1);
  if (noise) c = std::max(c, static_cast<std::size_t>(noise->rows()));
  return c;
}

Eigen::VectorXd MixtureSpec::class_prior() const {
  Eigen::VectorXd prior = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_classes()));
  for (const auto& comp : components) prior[static_cast<Eigen::Index>(comp.class_id)] += comp.weight;
  return prior;
}

Eigen::MatrixXd MixtureSpec::confusion() const {
  if (noise) return *noise;
  const auto c = static_cast<Eigen::Index>(num_classes());
  return Eigen::MatrixXd::Identity(c, c);
}

void MixtureSpec::validate() const {
  if (components.empty()) throw ValidationError("mixture: no components");
  double total = 0.0;
  for (const auto& comp : components) {
    if (!(comp.weight > 0.0)) throw ValidationError("mixture: component weights must be positive");
    if (!(comp.variance[0] > 0.0) || !(comp.variance[1] > 0.0)) {
      throw ValidationError("mixture: variances must be positive");
    }
    if (!std::isfinite(comp.mean[0]) || !std::isfinite(comp.mean[1])) {
      throw ValidationError("mixture: means must be finite");
    }
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw ValidationError("mixture: component weights sum to " + std::to_string(total));
  }
  if (noise) {
    const auto c = static_cast<Eigen::Index>(num_classes());
    if (noise->rows() != c || noise->cols() != c) {
      throw ValidationError("mixture: confusion matrix must be square over the classes");
    }
    (void)ConditionalMatrix(*noise);  // row-stochastic check
  }
}

Eigen::MatrixXd symmetric_flip(double rho, std::size_t classes) {
  if (rho < 0.0 || rho > 1.0) throw ValidationError("flip rate must lie in [0, 1]");
  if (classes < 2) throw ValidationError("flip matrix needs at least 2 classes");
  const auto c = static_cast<Eigen::Index>(classes);
  const double off = rho / static_cast<double>(classes - 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(c, c, off);
  m.diagonal().setConstant(1.0 - rho);
  return m;
}

MixtureSpec two_component_mixture(double distance, double weight0, double variance, double flip_rate,
                                  std::uint64_t seed) {
  MixtureSpec spec;
  spec.components.push_back({{-0.5 * distance, 0.0}, {variance, variance}, weight0, 0});
  spec.components.push_back({{0.5 * distance, 0.0}, {variance, variance}, 1.0 - weight0, 1});
  if (flip_rate > 0.0) spec.noise = symmetric_flip(flip_rate, 2);
  spec.seed = seed;
  spec.validate();
  return spec;
}

SampleSet sample(const MixtureSpec& spec, std::size_t n) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<double> weights;
  for (const auto& comp : spec.components) weights.push_back(comp.weight);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);

  const Eigen::MatrixXd conf = spec.confusion();
  std::vector<std::discrete_distribution<std::size_t>> flip;
  for (Eigen::Index r = 0; r < conf.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < conf.cols(); ++c) row.push_back(conf(r, c));
    flip.emplace_back(row.begin(), row.end());
  }

  SampleSet out;
  out.points.resize(static_cast<Eigen::Index>(n), 2);
  out.observed_labels.resize(n);
  out.true_labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& comp = spec.components[pick(rng)];
    const auto row = static_cast<Eigen::Index>(i);
    for (int d = 0; d < 2; ++d) {
      out.points(row, d) = comp.mean[static_cast<std::size_t>(d)] +
                           std::sqrt(comp.variance[static_cast<std::size_t>(d)]) * normal(rng);
    }
    out.true_labels[i] = comp.class_id;
    out.observed_labels[i] = flip[comp.class_id](rng);
  }
  return out;
}

ConditionalMatrix analytic_posterior(const MixtureSpec& spec, const Eigen::Ref<const Eigen::MatrixX2d>& points) {
  spec.validate();
  const auto c = static_cast<Eigen::Index>(spec.num_classes());
  const Eigen::MatrixXd conf = spec.confusion();
  Eigen::MatrixXd rows(points.rows(), c);
  std::vector<double> log_terms(spec.components.size());
  Eigen::VectorXd truth(c);

  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (std::size_t k = 0; k < spec.components.size(); ++k) {
      const auto& comp = spec.components[k];
      double lp = std::log(comp.weight);
      for (int d = 0; d < 2; ++d) {
        const double v = comp.variance[static_cast<std::size_t>(d)];
        const double diff = points(i, d) - comp.mean[static_cast<std::size_t>(d)];
        lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - diff * diff / (2.0 * v);
      }
      log_terms[k] = lp;
    }
    const double top = *std::max_element(log_terms.begin(), log_terms.end());
    truth.setZero();
    for (std::size_t k = 0; k < spec.components.size(); ++k) {
      truth[static_cast<Eigen::Index>(spec.components[k].class_id)] += std::exp(log_terms[k] - top);
    }
    truth /= truth.sum();
    rows.row(i) = truth.transpose() * conf;
    rows.row(i) /= rows.row(i).sum();
  }
  return ConditionalMatrix(std::move(rows));
}

GridRange default_range(const MixtureSpec& spec) {
  spec.validate();
  GridRange r{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
              {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto& comp : spec.components) {
    for (std::size_t d = 0; d < 2; ++d) {
      const double reach = 4.0 * std::sqrt(comp.variance[d]);
      r.lo[d] = std::min(r.lo[d], comp.mean[d] - reach);
      r.hi[d] = std::max(r.hi[d], comp.mean[d] + reach);
    }
  }
  return r;
}

DiscreteJoint discretize(const SampleSet& samples, const DiscretizeOptions& options, std::size_t num_classes) {
  if (samples.size() == 0) throw ValidationError("discretize: no samples");
  GridRange range{};
  if (options.range) {
    range = *options.range;
  } else {
    for (int d = 0; d < 2; ++d) {
      range.lo[d] = samples.points.col(d).minCoeff();
      range.hi[d] = samples.points.col(d).maxCoeff();
      const double pad = 1e-9 * std::max(1.0, range.hi[d] - range.lo[d]);
      range.lo[d] -= pad;
      range.hi[d] += pad;
    }
  }
  check_grid(options, range);
  const std::size_t bins = options.bins_per_axis;
  const auto cells = static_cast<Eigen::Index>(bins * bins);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cells, static_cast<Eigen::Index>(num_classes));
  double kept = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t idx[2];
    bool inside = true;
    for (int d = 0; d < 2; ++d) {
      const double v = samples.points(static_cast<Eigen::Index>(i), d);
      if (v < range.lo[d] || v >= range.hi[d]) {
        inside = false;
        break;
      }
      const double t = (v - range.lo[d]) / (range.hi[d] - range.lo[d]);
      idx[d] = std::min(bins - 1, static_cast<std::size_t>(t * static_cast<double>(bins)));
    }
    if (!inside) continue;
    if (samples.observed_labels[i] >= num_classes) throw ValidationError("discretize: label out of range");
    counts(static_cast<Eigen::Index>(idx[0] * bins + idx[1]),
           static_cast<Eigen::Index>(samples.observed_labels[i])) += 1.0;
    kept += 1.0;
  }
  if (kept == 0.0) throw ValidationError("discretize: all samples fall outside the grid range");

  std::vector<std::string> labels(static_cast<std::size_t>(cells));
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) labels[a * bins + b] = cell_label(a, b);
  }
  return DiscreteJoint(counts / kept, std::move(labels));
}

DiscreteJoint discretize_exact(const MixtureSpec& spec, const DiscretizeOptions& options) {
  spec.validate();
  const GridRange range = options.range ? *options.range : default_range(spec);
  check_grid(options, range);
  const std::size_t bins = options.bins_per_axis;
  const Eigen::MatrixXd conf = spec.confusion();
  const auto classes = static_cast<Eigen::Index>(spec.num_classes());

  std::vector<double> edges[2];
  for (int d = 0; d < 2; ++d) {
    edges[d].resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
      edges[d][b] = range.lo[d] + (range.hi[d] - range.lo[d]) * static_cast<double>(b) / static_cast<double>(bins);
    }
  }

  const auto cells = static_cast<Eigen::Index>(bins * bins);
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(cells, classes);
  for (const auto& comp : spec.components) {
    std::vector<double> axis_mass[2];
    for (int d = 0; d < 2; ++d) {
      const auto du = static_cast<std::size_t>(d);
      axis_mass[d].resize(bins);
      for (std::size_t b = 0; b < bins; ++b) {
        axis_mass[d][b] = interval_mass(edges[d][b], edges[d][b + 1], comp.mean[du], comp.variance[du]);
      }
    }
    for (std::size_t a = 0; a < bins; ++a) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double mass = comp.weight * axis_mass[0][a] * axis_mass[1][b];
        if (mass <= 0.0) continue;
        joint.row(static_cast<Eigen::Index>(a * bins + b)) +=
            mass * conf.row(static_cast<Eigen::Index>(comp.class_id));
      }
    }
  }
  const double total = joint.sum();
  if (!(total > 0.0)) throw ValidationError("discretize: all mass lies outside the grid range");

  std::vector<std::string> labels(static_cast<std::size_t>(cells));
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) labels[a * bins + b] = cell_label(a, b);
  }
  return DiscreteJoint(joint / total, std::move(labels));
}

}  // namespace ibl
