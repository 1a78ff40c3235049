#pragma once

// Named dataset presets and the end-to-end pipelines built from them:
// estimator batteries, the noise-rate table, and default sweep grids.

#include <optional>
#include <string>
#include <vector>

#include "ibl/classifier.hpp"
#include "ibl/estimators.hpp"
#include "ibl/ib_solver.hpp"
#include "ibl/synth.hpp"

namespace ibl {

inline constexpr double kNoiseStudyDistance = 16.0;
inline constexpr double kOverlapStudyWeight = 0.6;
inline constexpr double kComponentVariance = 0.25;

/// "noise-<rho>" (distance 16, equal weights), "deterministic" (= noise-0),
/// "overlap-<distance>" (weights 0.6/0.4, no label noise).
MixtureSpec preset_spec(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> preset_names_help();

/// Estimators that can run on a dataset. Class-conditional needs the mixture spec.
struct EstimatorSelection {
  bool subset = true;
  bool class_conditional = true;
  bool functional = true;
  bool max_correlation = true;
  bool info_density = false;
};

EstimatorSelection parse_selection(const std::string& methods);

struct EstimateInputs {
  std::optional<DiscreteJoint> joint;
  std::optional<ConditionalMatrix> cond;  // used instead of the joint's conditional when given
  std::optional<MixtureSpec> spec;
};

struct EstimateOptions {
  SubsetSearchOptions subset;
  FunctionalOptions functional;
};

/// Runs every selected estimator that the inputs support, in a fixed order.
/// Independence errors propagate; estimators without the inputs they need are skipped.
std::vector<BetaEstimate> run_estimators(const EstimateInputs& inputs, const EstimatorSelection& selection,
                                         const EstimateOptions& options = {});

/// Class-conditional closed form for a mixture with well-separated components.
BetaEstimate corollary_for_spec(const MixtureSpec& spec);

/// Geometric grid bracketing a predicted threshold: [0.54, 1.62] x predicted, 25 points.
std::vector<double> default_beta_grid(double predicted, std::size_t points = 25);

struct NoiseTableOptions {
  std::vector<double> rates;           // empty selects 0.02, 0.04, ..., 0.48
  bool true_posterior = true;          // subset search on the exact-mode joint
  bool learned_posterior = true;       // subset search on classifier output
  bool functional = true;
  bool sweep = false;
  std::size_t samples = 10000;
  std::size_t bins = 32;
  std::uint64_t seed = 0;
  TrainConfig train;
  SolveOptions solve;
};

struct NoiseTableRow {
  double rate = 0.0;
  double corollary = 0.0;
  std::optional<double> subset_true;
  std::optional<double> subset_learned;
  std::optional<double> functional;
  std::optional<double> observed;
};

std::vector<double> noise_table_rates();
std::vector<NoiseTableRow> noise_table(const NoiseTableOptions& options);

/// Learned-posterior route: sample, fit the classifier, search on its predictions.
BetaEstimate learned_posterior_estimate(const MixtureSpec& spec, std::size_t n, const TrainConfig& train,
                                        const SubsetSearchOptions& search = {});

}  // namespace ibl
