#include "ibl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace ibl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDenominatorFloor = 1e-12;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// (1/mass - 1) / (sum_j (s_j/mass)^2 / py_j - 1) where s_j = sum_{i in Omega} w_i p(y_j|x_i).
// Returns +inf when the subset is uninformative or has full mass.
double beta_from_sums(double mass, const double* label_sums, const Eigen::VectorXd& py) {
  if (!(mass > 0.0)) return kInf;
  // sum_j q_j^2 / p_j - 1 written as a chi-square sum to avoid cancellation.
  double denom = 0.0;
  for (Eigen::Index j = 0; j < py.size(); ++j) {
    if (py[j] <= 0.0) continue;
    const double d = label_sums[j] / mass - py[j];
    denom += d * d / py[j];
  }
  const double numer = 1.0 / mass - 1.0;
  if (denom <= kDenominatorFloor || numer <= 0.0) return kInf;
  return numer / denom;
}

// -ln(mass) / KL(p(y|Omega) || p(y)).
double info_density_from_sums(double mass, const double* label_sums, const Eigen::VectorXd& py) {
  if (!(mass > 0.0) || mass >= 1.0) return kInf;
  double kl = 0.0;
  for (Eigen::Index j = 0; j < py.size(); ++j) {
    const double q = label_sums[j] / mass;
    if (q > 0.0 && py[j] > 0.0) kl += q * std::log(q / py[j]);
  }
  if (kl <= kDenominatorFloor) return kInf;
  return -std::log(mass) / kl;
}

Eigen::VectorXd raw_label_marginal(const ConditionalMatrix& cond) {
  return cond.rows().transpose() * cond.weights();
}

// Cumulative weights and weighted label sums along a pivot-sorted order.
struct SortedSums {
  std::vector<std::size_t> order;
  std::vector<double> mass;    // mass[k] = sum of the first k weights
  Eigen::MatrixXd labels;      // column k = label sums of the first k rows

  SortedSums(const ConditionalMatrix& cond, std::vector<std::size_t> ord) : order(std::move(ord)) {
    const auto n = order.size();
    const auto c = static_cast<Eigen::Index>(cond.num_classes());
    mass.assign(n + 1, 0.0);
    labels = Eigen::MatrixXd::Zero(c, static_cast<Eigen::Index>(n + 1));
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(order[k]);
      const double w = cond.weights()[i];
      mass[k + 1] = mass[k] + w;
      for (Eigen::Index j = 0; j < c; ++j) {
        labels(j, static_cast<Eigen::Index>(k + 1)) =
            labels(j, static_cast<Eigen::Index>(k)) + w * cond.rows()(i, j);
      }
    }
  }
  std::size_t size() const { return order.size(); }
};

struct Candidate {
  double value = kInf;
  std::size_t left = 0;   // inclusive, position in sorted order
  std::size_t right = 0;  // exclusive
};

template <typename Objective>
class FamilySearch {
 public:
  FamilySearch(const SortedSums& sums, const Eigen::VectorXd& py, Objective objective)
      : sums_(sums), py_(py), objective_(objective), scratch_(py.size()) {}

  // Objective of the sorted positions [left, right).
  double eval(std::size_t left, std::size_t right) {
    if (right <= left || (left == 0 && right == sums_.size())) return kInf;
    if (left == 0) {
      return objective_(sums_.mass[right], sums_.labels.col(static_cast<Eigen::Index>(right)).data(),
                        py_);
    }
    const double mass = sums_.mass[right] - sums_.mass[left];
    scratch_ = sums_.labels.col(static_cast<Eigen::Index>(right)) -
               sums_.labels.col(static_cast<Eigen::Index>(left));
    return objective_(mass, scratch_.data(), py_);
  }

  Candidate exhaustive_prefix() {
    Candidate best;
    for (std::size_t r = 1; r < sums_.size(); ++r) consider(best, 0, r);
    return best;
  }

  Candidate exhaustive_range(const ConditionalMatrix& cond) {
    Candidate best;
    const auto n = sums_.size();
    const auto c = py_.size();
    Eigen::VectorXd acc(c);
    for (std::size_t l = 0; l < n; ++l) {
      acc.setZero();
      double mass = 0.0;
      for (std::size_t r = l; r < n; ++r) {
        const auto i = static_cast<Eigen::Index>(sums_.order[r]);
        const double w = cond.weights()[i];
        mass += w;
        for (Eigen::Index j = 0; j < c; ++j) acc[j] += w * cond.rows()(i, j);
        if (l == 0 && r + 1 == n) continue;
        const double v = objective_(mass, acc.data(), py_);
        if (v < best.value) best = {v, l, r + 1};
      }
    }
    return best;
  }

  // Narrow the bracket [a, b] of the moving endpoint with the 0.8/0.2 rule.
  // When move_right, candidates are [fixed, end) with end in [a, b];
  // otherwise candidates are [start, fixed) with start in [a, b].
  Candidate narrow(std::size_t fixed, std::size_t a, std::size_t b, bool move_right, double tol) {
    auto f = [&](std::size_t m) { return move_right ? eval(fixed, m) : eval(m, fixed); };
    Candidate best;
    auto note = [&](std::size_t m, double v) {
      if (v < best.value) best = move_right ? Candidate{v, fixed, m} : Candidate{v, m, fixed};
    };
    double fa = f(a), fb = f(b);
    note(a, fa);
    note(b, fb);
    for (;;) {
      const auto a2 = static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(a) + 0.2 * static_cast<double>(b)));
      const auto b2 = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(a) + 0.8 * static_cast<double>(b)));
      if (a2 == a && b2 == b) break;
      const double fa2 = f(a2), fb2 = f(b2);
      note(a2, fa2);
      note(b2, fb2);
      bool moved = false;
      if (improves(fa2, fa, tol)) { a = a2; fa = fa2; moved = true; }
      if (improves(fb2, fb, tol)) { b = b2; fb = fb2; moved = true; }
      if (!moved) break;
    }
    return best;
  }

  Candidate narrowing_prefix(double tol) { return narrow(0, 1, sums_.size(), true, tol); }

  // Alternate narrowing of i_right (i_left fixed) and i_left (i_right fixed).
  Candidate narrowing_range(double tol) {
    Candidate best = narrow(0, 1, sums_.size(), true, tol);
    for (int round = 0; round < 64 && std::isfinite(best.value); ++round) {
      const Candidate l = narrow(best.right, 0, best.right - 1, false, tol);
      const Candidate r = narrow(l.value < best.value ? l.left : best.left,
                                 (l.value < best.value ? l.left : best.left) + 1, sums_.size(), true, tol);
      const Candidate next = l.value <= r.value ? l : r;
      if (!improves(next.value, best.value, tol)) break;
      best = next;
    }
    return best;
  }

 private:
  static bool improves(double candidate, double incumbent, double tol) {
    if (!std::isfinite(candidate)) return false;
    if (!std::isfinite(incumbent)) return true;
    return candidate < incumbent * (1.0 - tol);
  }

  void consider(Candidate& best, std::size_t l, std::size_t r) {
    const double v = eval(l, r);
    if (v < best.value) best = {v, l, r};
  }

  const SortedSums& sums_;
  const Eigen::VectorXd& py_;
  Objective objective_;
  Eigen::VectorXd scratch_;
};

struct PivotOutcome {
  Candidate best;
  std::vector<std::size_t> order;
};

template <typename Objective>
PivotOutcome search_pivot(const ConditionalMatrix& cond, const Eigen::VectorXd& py, std::size_t pivot,
                          const SubsetSearchOptions& options, Objective objective) {
  SortedSums sums(cond, pivot_order(cond, pivot));
  FamilySearch<Objective> search(sums, py, objective);
  Candidate best;
  if (options.strategy == SearchStrategy::exhaustive) {
    best = options.family == SubsetFamily::prefix ? search.exhaustive_prefix()
                                                  : search.exhaustive_range(cond);
  } else {
    best = options.family == SubsetFamily::prefix ? search.narrowing_prefix(options.tolerance)
                                                  : search.narrowing_range(options.tolerance);
  }
  return {best, std::move(sums.order)};
}

void check_search_input(const ConditionalMatrix& cond) {
  if (cond.num_classes() < 2) throw ValidationError("subset search needs at least 2 classes");
  if (cond.num_examples() < 2) throw ValidationError("subset search needs at least 2 examples");
}

template <typename Objective>
SubsetResult run_search(const ConditionalMatrix& cond, const SubsetSearchOptions& options,
                        Objective objective) {
  check_search_input(cond);
  const Eigen::VectorXd py = raw_label_marginal(cond);
  const auto classes = static_cast<long>(cond.num_classes());
  std::vector<PivotOutcome> outcomes(static_cast<std::size_t>(classes));

#pragma omp parallel for schedule(dynamic) if (options.execution == Execution::parallel)
  for (long j = 0; j < classes; ++j) {
    outcomes[static_cast<std::size_t>(j)] =
        search_pivot(cond, py, static_cast<std::size_t>(j), options, objective);
  }

  std::size_t pivot = 0;
  for (std::size_t j = 1; j < outcomes.size(); ++j) {
    if (outcomes[j].best.value < outcomes[pivot].best.value) pivot = j;
  }
  const auto& win = outcomes[pivot];
  if (!std::isfinite(win.best.value)) {
    throw IndependenceError("X independent of Y: every candidate subset is uninformative");
  }

  SubsetResult result;
  result.beta0 = win.best.value;
  result.pivot_class = pivot;
  result.member_indices.assign(win.order.begin() + static_cast<std::ptrdiff_t>(win.best.left),
                               win.order.begin() + static_cast<std::ptrdiff_t>(win.best.right));
  std::sort(result.member_indices.begin(), result.member_indices.end());

  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cond.num_classes()));
  double mass = 0.0;
  for (auto i : result.member_indices) {
    const auto ii = static_cast<Eigen::Index>(i);
    mass += cond.weights()[ii];
    sums += cond.weights()[ii] * cond.rows().row(ii).transpose();
  }
  result.p_omega = mass;
  result.p_y_given_omega = Marginal(sums / sums.sum());
  return result;
}

Eigen::VectorXd centered(const DiscreteJoint& joint, const Eigen::Ref<const Eigen::VectorXd>& h,
                         const char* what) {
  if (static_cast<std::size_t>(h.size()) != joint.size_x()) {
    throw ValidationError(std::string(what) + ": h has " + std::to_string(h.size()) +
                          " entries, joint has " + std::to_string(joint.size_x()) + " rows");
  }
  if (!h.allFinite()) throw ValidationError(std::string(what) + ": h is not finite");
  const double mean = joint.px().dot(h);
  Eigen::VectorXd hc = h.array() - mean;
  const double var = joint.px().dot(hc.cwiseAbs2());
  const double scale = std::max(1.0, h.cwiseAbs2().maxCoeff());
  if (var <= 1e-14 * scale) {
    throw InvalidDirectionError(std::string(what) + ": h is constant on the support of p(x)");
  }
  return hc;
}

// E_y[(E[hc|y])^2] for centered hc.
double between_class_energy(const DiscreteJoint& joint, const Eigen::VectorXd& hc) {
  const Eigen::VectorXd s = joint.probs().transpose() * hc;
  return (s.cwiseAbs2().array() / joint.py().array()).sum();
}

void normalize_direction(const DiscreteJoint& joint, Eigen::VectorXd& h) {
  h.array() -= joint.px().dot(h);
  h /= std::sqrt(joint.px().dot(h.cwiseAbs2()));
}

}  // namespace

std::string to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::subset_search: return "subset_search";
    case EstimateMethod::class_conditional: return "class_conditional";
    case EstimateMethod::functional: return "functional";
    case EstimateMethod::max_correlation_inverse: return "max_correlation_inverse";
    case EstimateMethod::empirical_sweep: return "empirical_sweep";
    case EstimateMethod::info_density: return "info_density";
  }
  return "unknown";
}

std::optional<EstimateMethod> parse_method(std::string_view name) {
  for (auto m : {EstimateMethod::subset_search, EstimateMethod::class_conditional,
                 EstimateMethod::functional, EstimateMethod::max_correlation_inverse,
                 EstimateMethod::empirical_sweep, EstimateMethod::info_density}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

double get_beta(const ConditionalMatrix& cond, std::span<const std::size_t> omega) {
  if (omega.empty()) throw ValidationError("get_beta: empty subset");
  std::vector<bool> seen(cond.num_examples(), false);
  const auto c = static_cast<Eigen::Index>(cond.num_classes());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(c);
  double mass = 0.0;
  for (auto i : omega) {
    if (i >= cond.num_examples() || seen[i]) {
      throw ValidationError("get_beta: subset indices must be distinct and in range");
    }
    seen[i] = true;
    const auto ii = static_cast<Eigen::Index>(i);
    const double w = cond.weights()[ii];
    mass += w;
    for (Eigen::Index j = 0; j < c; ++j) sums[j] += w * cond.rows()(ii, j);
  }
  const double beta = beta_from_sums(mass, sums.data(), raw_label_marginal(cond));
  if (!std::isfinite(beta) || omega.size() == cond.num_examples()) {
    throw UninformativeSubsetError("get_beta: subset carries no label information (p(y|Omega) = p(y))");
  }
  return beta;
}

std::vector<std::size_t> pivot_order(const ConditionalMatrix& cond, std::size_t pivot) {
  std::vector<std::size_t> order(cond.num_examples());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto col = cond.rows().col(static_cast<Eigen::Index>(pivot));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return col[static_cast<Eigen::Index>(a)] > col[static_cast<Eigen::Index>(b)];
  });
  return order;
}

SubsetResult subset_search(const ConditionalMatrix& cond, const SubsetSearchOptions& options) {
  return run_search(cond, options, beta_from_sums);
}

BetaEstimate subset_search_estimate(const ConditionalMatrix& cond, const SubsetSearchOptions& options) {
  BetaEstimate est;
  est.method = EstimateMethod::subset_search;
  est.subset = subset_search(cond, options);
  est.value = est.subset->beta0;
  est.diagnostics["family"] = options.family == SubsetFamily::prefix ? "prefix" : "range";
  est.diagnostics["strategy"] =
      options.strategy == SearchStrategy::exhaustive ? "exhaustive" : "narrowing";
  est.diagnostics["subset_size"] = std::to_string(est.subset->member_indices.size());
  est.diagnostics["upper_bound"] = "true";
  return est;
}

BetaEstimate info_density_estimate(const ConditionalMatrix& cond, const SubsetSearchOptions& options) {
  BetaEstimate est;
  est.method = EstimateMethod::info_density;
  est.subset = run_search(cond, options, info_density_from_sums);
  est.value = est.subset->beta0;
  est.diagnostics["diagnostic_only"] = "true";
  est.diagnostics["subset_size"] = std::to_string(est.subset->member_indices.size());
  return est;
}

BetaEstimate corollary_class_conditional(const Eigen::MatrixXd& noise, const Marginal& prior) {
  if (noise.rows() != static_cast<Eigen::Index>(prior.size()) || noise.cols() < 2) {
    throw ValidationError("class-conditional: noise matrix must be |Y*| x |Y| with |Y| >= 2");
  }
  // Row validation reuses the conditional-matrix checks.
  const ConditionalMatrix rows(noise, prior.probs());
  const Eigen::VectorXd py = rows.rows().transpose() * prior.probs();
  if ((py.array() <= 0.0).any()) {
    throw ValidationError("class-conditional: every observed label needs positive probability");
  }
  BetaEstimate est;
  est.method = EstimateMethod::class_conditional;
  est.value = kInf;
  for (Eigen::Index s = 0; s < noise.rows(); ++s) {
    const double ps = prior.probs()[s];
    if (ps <= 0.0 || ps >= 1.0) continue;
    const double denom = (rows.rows().row(s).transpose().cwiseAbs2().array() / py.array()).sum() - 1.0;
    if (denom <= kDenominatorFloor) continue;
    const double v = (1.0 / ps - 1.0) / denom;
    if (v < est.value) {
      est.value = v;
      est.diagnostics["true_class"] = std::to_string(s);
    }
  }
  if (!std::isfinite(est.value)) {
    throw IndependenceError("class-conditional: observed labels are independent of the true class");
  }
  return est;
}

double binary_symmetric_beta0(double rho) {
  const double gap = 1.0 - 2.0 * rho;
  if (rho < 0.0 || rho > 1.0) throw ValidationError("flip rate must lie in [0, 1]");
  if (std::abs(gap) < 1e-12) throw IndependenceError("flip rate 0.5 makes labels independent");
  return 1.0 / (gap * gap);
}

double beta0_functional(const DiscreteJoint& joint, const Eigen::Ref<const Eigen::VectorXd>& h) {
  const Eigen::VectorXd hc = centered(joint, h, "beta0_functional");
  const double var = joint.px().dot(hc.cwiseAbs2());
  const double denom = between_class_energy(joint, hc);
  if (denom <= 1e-14 * var) {
    throw InvalidDirectionError("beta0_functional: E[h|y] does not vary with y");
  }
  return var / denom;
}

BetaEstimate minimize_functional(const DiscreteJoint& joint, const FunctionalOptions& options) {
  if (joint.size_x() < 2) throw ValidationError("minimize_functional: need |X| >= 2");
  if (joint.size_y() < 2) throw IndependenceError("minimize_functional: a single label carries no information");
  if (options.iters < 1 || options.lr <= 0.0 || options.lr > 1.0) {
    throw ValidationError("minimize_functional: iters >= 1 and lr in (0, 1] required");
  }

  const Eigen::MatrixXd& p = joint.probs();
  const Eigen::VectorXd inv_px = joint.px().cwiseInverse();
  const Eigen::VectorXd inv_py = joint.py().cwiseInverse();

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd h(static_cast<Eigen::Index>(joint.size_x()));
  double spread = 0.0;
  for (int attempt = 0; attempt < 16 && spread <= 1e-12; ++attempt) {
    for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = normal(rng);
    h.array() -= joint.px().dot(h);
    spread = joint.px().dot(h.cwiseAbs2());
  }
  if (spread <= 1e-12) throw ValidationError("minimize_functional: could not draw a non-constant start");
  normalize_direction(joint, h);

  // With E[h]=0 and E[h^2]=1, beta0[h] = 1 / energy(h). The step below is the
  // gradient of log beta0[h] measured in the p(x)-weighted inner product.
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(options.iters) + 1);
  Eigen::VectorXd best_h = h;
  double best_beta = kInf;
  bool converged = false;
  int iter = 0;
  for (; iter < options.iters; ++iter) {
    const Eigen::VectorXd s = p.transpose() * h;
    const double energy = (s.cwiseAbs2().array() * inv_py.array()).sum();
    if (energy <= 1e-14) {
      throw IndependenceError("minimize_functional: E[h|y] is flat for every direction tried");
    }
    const double beta = 1.0 / energy;
    history.push_back(beta);
    if (beta < best_beta) {
      best_beta = beta;
      best_h = h;
    }
    const auto w = static_cast<std::size_t>(options.window);
    if (history.size() > w) {
      const double past = history[history.size() - 1 - w];
      if (std::abs(past - beta) <= options.rel_change * beta) {
        converged = true;
        break;
      }
    }
    const Eigen::VectorXd pulled = inv_px.asDiagonal() * (p * (inv_py.asDiagonal() * s));
    h += options.lr * (pulled / energy - h);
    normalize_direction(joint, h);
  }

  BetaEstimate est;
  est.method = EstimateMethod::functional;
  est.value = best_beta;
  est.h_vector = best_h;
  est.diagnostics["iterations"] = std::to_string(iter);
  est.diagnostics["converged"] = converged ? "true" : "false";
  if (!converged) {
    est.diagnostics["warning"] = "no convergence within " + std::to_string(options.iters) +
                                 " iterations; returning best iterate";
  }
  return est;
}

MaxCorrelation max_correlation_svd(const DiscreteJoint& joint) {
  const Eigen::VectorXd sx = joint.px().cwiseSqrt();
  const Eigen::VectorXd sy = joint.py().cwiseSqrt();
  const Eigen::MatrixXd q = sx.cwiseInverse().asDiagonal() * joint.probs() * sy.cwiseInverse().asDiagonal();

  MaxCorrelation out;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> top(q);
    out.top_singular = top.singularValues()[0];
  }
  // sqrt(p(x)) sqrt(p(y))^T is the leading singular pair; removing it leaves rho_m on top.
  const Eigen::MatrixXd deflated = q - sx * sy.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(deflated, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.rho = std::clamp(svd.singularValues()[0], 0.0, 1.0);
  out.f = sx.cwiseInverse().asDiagonal() * svd.matrixU().col(0);
  out.g = sy.cwiseInverse().asDiagonal() * svd.matrixV().col(0);
  Eigen::Index at = 0;
  out.f.cwiseAbs().maxCoeff(&at);
  if (out.f[at] < 0.0) {
    out.f = -out.f;
    out.g = -out.g;
  }
  return out;
}

double max_correlation(const DiscreteJoint& joint) { return max_correlation_svd(joint).rho; }

BetaEstimate max_correlation_estimate(const DiscreteJoint& joint) {
  const MaxCorrelation mc = max_correlation_svd(joint);
  if (mc.rho <= 1e-7) throw IndependenceError("maximum correlation is zero: X independent of Y");
  BetaEstimate est;
  est.method = EstimateMethod::max_correlation_inverse;
  est.value = 1.0 / (mc.rho * mc.rho);
  est.h_vector = mc.f;
  est.diagnostics["rho_m"] = fmt(mc.rho);
  est.diagnostics["top_singular_value"] = fmt(mc.top_singular);
  if (std::abs(mc.top_singular - 1.0) > 1e-9) {
    est.diagnostics["warning"] = "leading singular value deviates from 1";
  }
  return est;
}

Eigen::MatrixXd onset_prediction(const DiscreteJoint& joint, const Eigen::Ref<const Eigen::VectorXd>& h_star) {
  const Eigen::VectorXd hc = centered(joint, h_star, "onset_prediction");
  const Eigen::VectorXd s = joint.probs().transpose() * hc;
  return hc * s.transpose();
}

}  // namespace ibl
