#include "ibl/experiment.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace ibl {
namespace {

double parse_suffix(const std::string& name, std::size_t prefix_len) {
  const std::string rest = name.substr(prefix_len);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
  if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size()) {
    throw ValidationError("unknown preset '" + name + "'");
  }
  return v;
}

}  // namespace

MixtureSpec preset_spec(const std::string& name, std::uint64_t seed) {
  if (name == "deterministic") {
    return two_component_mixture(kNoiseStudyDistance, 0.5, kComponentVariance, 0.0, seed);
  }
  if (name.rfind("noise-", 0) == 0) {
    const double rho = parse_suffix(name, 6);
    if (rho < 0.0 || rho >= 0.5) throw ValidationError("noise preset needs 0 <= rho < 0.5");
    return two_component_mixture(kNoiseStudyDistance, 0.5, kComponentVariance, rho, seed);
  }
  if (name.rfind("overlap-", 0) == 0) {
    const double d = parse_suffix(name, 8);
    if (!(d > 0.0)) throw ValidationError("overlap preset needs a positive distance");
    return two_component_mixture(d, kOverlapStudyWeight, kComponentVariance, 0.0, seed);
  }
  throw ValidationError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names_help() {
  return {"noise-<rho>", "deterministic", "overlap-<distance>"};
}

EstimatorSelection parse_selection(const std::string& methods) {
  if (methods == "all") return {true, true, true, true, true};
  EstimatorSelection s{false, false, false, false, false};
  std::stringstream ss(methods);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "subset" || item == "subset_search") s.subset = true;
    else if (item == "corollary" || item == "class_conditional") s.class_conditional = true;
    else if (item == "functional") s.functional = true;
    else if (item == "maxcorr" || item == "max_correlation_inverse") s.max_correlation = true;
    else if (item == "info_density") s.info_density = true;
    else throw ValidationError("unknown estimator '" + item + "'");
  }
  return s;
}

BetaEstimate corollary_for_spec(const MixtureSpec& spec) {
  spec.validate();
  return corollary_class_conditional(spec.confusion(), Marginal(spec.class_prior()));
}

std::vector<BetaEstimate> run_estimators(const EstimateInputs& inputs, const EstimatorSelection& selection,
                                         const EstimateOptions& options) {
  std::optional<ConditionalMatrix> cond = inputs.cond;
  std::optional<DiscreteJoint> joint = inputs.joint;
  if (!cond && joint) cond = conditional_from_joint(*joint);
  if (!joint && cond) joint = joint_from_conditional(*cond);

  std::vector<BetaEstimate> out;
  if (selection.subset && cond) out.push_back(subset_search_estimate(*cond, options.subset));
  if (selection.class_conditional && inputs.spec) out.push_back(corollary_for_spec(*inputs.spec));
  if (selection.functional && joint) out.push_back(minimize_functional(*joint, options.functional));
  if (selection.max_correlation && joint) out.push_back(max_correlation_estimate(*joint));
  if (selection.info_density && cond) out.push_back(info_density_estimate(*cond, options.subset));
  return out;
}

std::vector<double> default_beta_grid(double predicted, std::size_t points) {
  if (!(predicted > 0.0) || !std::isfinite(predicted)) {
    throw ValidationError("default grid needs a finite positive predicted threshold");
  }
  return geometric_grid(0.54 * predicted, 1.62 * predicted, points);
}

std::vector<double> noise_table_rates() {
  std::vector<double> rates;
  for (int k = 1; k <= 24; ++k) rates.push_back(0.02 * k);
  return rates;
}

BetaEstimate learned_posterior_estimate(const MixtureSpec& spec, std::size_t n, const TrainConfig& train,
                                        const SubsetSearchOptions& search) {
  const SampleSet data = sample(spec, n);
  const MlpModel model = fit(data, train);
  BetaEstimate est = subset_search_estimate(predict_proba(model, data.points), search);
  est.diagnostics["posterior"] = "learned";
  est.diagnostics["samples"] = std::to_string(n);
  est.diagnostics["final_training_loss"] = std::to_string(model.loss_history.back());
  return est;
}

std::vector<NoiseTableRow> noise_table(const NoiseTableOptions& options) {
  const std::vector<double> rates = options.rates.empty() ? noise_table_rates() : options.rates;
  std::vector<NoiseTableRow> rows;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double rho = rates[k];
    const MixtureSpec spec = two_component_mixture(kNoiseStudyDistance, 0.5, kComponentVariance, rho,
                                                   derive_seed(options.seed, 0x7ab, k));
    NoiseTableRow row;
    row.rate = rho;
    row.corollary = corollary_for_spec(spec).value;

    std::optional<DiscreteJoint> joint;
    if (options.true_posterior || options.functional || options.sweep) {
      DiscretizeOptions d;
      d.bins_per_axis = options.bins;
      joint = discretize_exact(spec, d);
    }
    if (options.true_posterior) row.subset_true = subset_search(conditional_from_joint(*joint)).beta0;
    if (options.learned_posterior) {
      TrainConfig train = options.train;
      train.seed = derive_seed(options.seed, 0x7ac, k);
      row.subset_learned = learned_posterior_estimate(spec, options.samples, train).value;
    }
    if (options.functional) {
      FunctionalOptions f;
      f.seed = derive_seed(options.seed, 0x7ad, k);
      row.functional = minimize_functional(*joint, f).value;
    }
    if (options.sweep) {
      SweepOptions s;
      s.solve = options.solve;
      s.solve.seed = derive_seed(options.seed, 0x7ae, k);
      const SweepResult res = sweep(*joint, default_beta_grid(row.corollary), s);
      row.observed = res.detected_beta0;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ibl
