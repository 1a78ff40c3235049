#pragma once

// Tabular Information Bottleneck: self-consistent iterations for
// min_{p(z|x)} I(X;Z) - beta I(Y;Z), and beta sweeps that locate the
// learnability onset empirically.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ibl/dist.hpp"
#include "ibl/parallel.hpp"

namespace ibl {

struct Encoder {
  Eigen::MatrixXd probs;  // |X| x |Z|, row-stochastic p(z|x)
  double beta = 0.0;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;           // I(X;Z) - beta I(Y;Z), nats
  int monotonicity_violations = 0;  // iterations whose objective rose by > 1e-12
};

struct InfoPlanePoint {
  double i_xz = 0.0;
  double i_yz = 0.0;
};

InfoPlanePoint info_plane(const Encoder& encoder, const DiscreteJoint& joint);
InfoPlanePoint info_plane(const Eigen::Ref<const Eigen::MatrixXd>& encoder, const DiscreteJoint& joint);

struct SolveOptions {
  std::size_t z_card = 0;  // 0 selects min(|X|, 2|Y|)
  std::uint64_t seed = 0;
  int max_iters = 5000;
  double tol = 1e-10;      // max-norm change of p(z|x) per iteration
  int restarts = 5;
  double init_concentration = 10.0;  // Dirichlet concentration of the random start
};

std::size_t default_z_card(const DiscreteJoint& joint);

/// One self-consistent update p(z|x) <- p(z) exp(-beta KL(p(y|x) || p(y|z))) / norm.
Eigen::MatrixXd ib_update(const DiscreteJoint& joint, const Eigen::MatrixXd& encoder, double beta);

/// Run the iterations from a given encoder until the change drops below tol.
Encoder iterate_from(const DiscreteJoint& joint, Eigen::MatrixXd encoder, double beta,
                     int max_iters, double tol);

/// Random starts near the uniform encoder; the best objective over restarts wins.
Encoder solve(const DiscreteJoint& joint, double beta, const SolveOptions& options = {});

struct OnsetProtocol {
  std::size_t baseline_points = 5;  // lowest grid points defining the trivial level
  double sigma_multiplier = 3.0;
  double floor = 1e-6;              // nats, guards a zero baseline spread
};

struct SweepPoint {
  double beta = 0.0;
  double i_xz = 0.0;
  double i_yz = 0.0;
  double objective = 0.0;
  bool converged = false;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::optional<double> detected_beta0;
  OnsetProtocol protocol;
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
};

struct SweepOptions {
  SolveOptions solve;
  OnsetProtocol protocol;
  Execution execution = Execution::parallel;
  bool warm_start = false;  // anneal from the largest beta downwards
};

/// Geometric grid of n points from lo to hi inclusive.
std::vector<double> geometric_grid(double lo, double hi, std::size_t n);

/// Onset = midpoint of the first grid step where I(X;Z) exceeds mean + k*std + floor
/// of the lowest baseline points.
void detect_onset(SweepResult& result);

SweepResult sweep(const DiscreteJoint& joint, const std::vector<double>& beta_grid,
                  const SweepOptions& options = {});

}  // namespace ibl
