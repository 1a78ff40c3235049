#pragma once

// Theoretical estimators of the IB learnability threshold beta_0.
//
// Every estimator returns a value > 1 on dependent data. The conspicuous
// subset search and the class-conditional closed form are upper bounds of the
// true threshold; the functional minimum equals 1 / rho_m^2, where rho_m is the
// maximum correlation of (X, Y).

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibl/dist.hpp"
#include "ibl/parallel.hpp"

namespace ibl {

/// The subset carries no label information: p(y|Omega) == p(y).
class UninformativeSubsetError : public Error {
 public:
  using Error::Error;
};

/// A perturbation direction h(x) that is constant on the support of p(x).
class InvalidDirectionError : public Error {
 public:
  using Error::Error;
};

struct SubsetResult {
  double beta0 = 0.0;
  std::size_t pivot_class = 0;
  std::vector<std::size_t> member_indices;  // sorted, original example indices
  double p_omega = 0.0;
  Marginal p_y_given_omega;
};

enum class EstimateMethod {
  subset_search,
  class_conditional,
  functional,
  max_correlation_inverse,
  empirical_sweep,
  info_density,
};

std::string to_string(EstimateMethod m);
std::optional<EstimateMethod> parse_method(std::string_view name);

struct BetaEstimate {
  double value = 0.0;
  EstimateMethod method = EstimateMethod::subset_search;
  std::optional<SubsetResult> subset;
  std::optional<Eigen::VectorXd> h_vector;
  std::map<std::string, std::string> diagnostics;
};

// --- Conspicuous-subset route --------------------------------------------

/// Threshold of one subset: (1/p(Omega) - 1) / (sum_j p(y_j|Omega)^2 / p(y_j) - 1).
/// Throws UninformativeSubsetError when the denominator is not positive.
double get_beta(const ConditionalMatrix& cond, std::span<const std::size_t> omega);

/// Which subsets are candidates once rows are sorted by the pivot column.
enum class SubsetFamily {
  prefix,  // {1..i_right}
  range,   // {i_left..i_right}
};

enum class SearchStrategy {
  exhaustive,  // every member of the family
  narrowing,   // 0.8/0.2 interpolation of the search bracket
};

struct SubsetSearchOptions {
  SubsetFamily family = SubsetFamily::prefix;
  SearchStrategy strategy = SearchStrategy::exhaustive;
  double tolerance = 1e-6;  // relative improvement required by the narrowing rule
  Execution execution = Execution::parallel;
};

/// Pivot-sorted order of example indices: descending p(y=pivot|x), ties by index.
std::vector<std::size_t> pivot_order(const ConditionalMatrix& cond, std::size_t pivot);

SubsetResult subset_search(const ConditionalMatrix& cond, const SubsetSearchOptions& options = {});

BetaEstimate subset_search_estimate(const ConditionalMatrix& cond,
                                    const SubsetSearchOptions& options = {});

/// Information-density ratio -ln p(Omega) / KL(p(y|Omega) || p(y)) minimized over
/// the subset_search candidate family. Not a bound; reported as a diagnostic.
BetaEstimate info_density_estimate(const ConditionalMatrix& cond,
                                   const SubsetSearchOptions& options = {});

// --- Closed forms ----------------------------------------------------------

/// Class-conditional label noise: noise(y*, y) = p(y|y*), prior = p(y*).
BetaEstimate corollary_class_conditional(const Eigen::MatrixXd& noise, const Marginal& prior);

/// Symmetric binary flip with rate rho and a uniform prior: 1 / (1 - 2 rho)^2.
double binary_symmetric_beta0(double rho);

// --- Functional route ------------------------------------------------------

/// Var(h) / (E_y[(E[h|y])^2] - E[h]^2) with all expectations under joint.
double beta0_functional(const DiscreteJoint& joint, const Eigen::Ref<const Eigen::VectorXd>& h);

struct FunctionalOptions {
  int iters = 20000;
  double lr = 1.0;
  std::uint64_t seed = 0;
  int window = 50;               // convergence window in steps
  double rel_change = 1e-9;      // relative change of beta0[h] over the window
};

BetaEstimate minimize_functional(const DiscreteJoint& joint, const FunctionalOptions& options = {});

// --- Maximum correlation ---------------------------------------------------

struct MaxCorrelation {
  double rho = 0.0;             // second singular value of Q
  double top_singular = 0.0;    // first singular value of Q, 1 for a valid joint
  Eigen::VectorXd f;            // maximizing f(x), E[f]=0, E[f^2]=1
  Eigen::VectorXd g;            // maximizing g(y), E[g]=0, E[g^2]=1
};

/// SVD of Q(x,y) = p(x,y) / sqrt(p(x) p(y)).
MaxCorrelation max_correlation_svd(const DiscreteJoint& joint);
double max_correlation(const DiscreteJoint& joint);

/// 1 / rho_m^2 with the maximizing f as h_vector. Throws IndependenceError if rho_m ~ 0.
BetaEstimate max_correlation_estimate(const DiscreteJoint& joint);

// --- Onset prediction ------------------------------------------------------

/// First-order change of p_beta(y|x) at the onset along h*:
/// delta(x,y) = (h*(x) - hbar) * sum_x' p(x',y) (h*(x') - hbar), unit scale.
Eigen::MatrixXd onset_prediction(const DiscreteJoint& joint,
                                 const Eigen::Ref<const Eigen::VectorXd>& h_star);

}  // namespace ibl
