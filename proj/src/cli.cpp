#include "ibl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ibl/experiment.hpp"
#include "ibl/io.hpp"

namespace ibl::cli {
namespace {

namespace fs = std::filesystem;
using io::json;

struct NonConvergence : Error {
  using Error::Error;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config;
};

struct InputFlags {
  std::string cond;
  std::string joint;
  std::string spec;
  std::string preset;
  std::size_t bins = 32;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Base seed; every random task derives its own stream from it");
  app->add_option("--out-dir", c.out_dir, "Output directory (default: $IBL_OUTPUT_DIR or .)");
  app->add_option("--config", c.config, "JSON document with the same keys as the long flags");
}

void add_inputs(CLI::App* app, InputFlags& in) {
  app->add_option("--cond", in.cond, "ConditionalMatrix CSV");
  app->add_option("--joint", in.joint, "DiscreteJoint CSV");
  app->add_option("--spec", in.spec, "MixtureSpec JSON");
  app->add_option("--preset", in.preset, "noise-<rho> | deterministic | overlap-<distance>");
  app->add_option("--bins", in.bins, "Grid bins per axis when discretizing a mixture")->check(CLI::Range(2, 4096));
}

fs::path output_dir(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("IBL_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

EstimateInputs load_inputs(const InputFlags& in, std::uint64_t seed) {
  const int given = !in.cond.empty() + !in.joint.empty() + !in.spec.empty() + !in.preset.empty();
  if (given != 1) throw ValidationError("give exactly one of --cond, --joint, --spec, --preset");
  EstimateInputs inputs;
  if (!in.cond.empty()) inputs.cond = io::load_conditional(in.cond);
  if (!in.joint.empty()) inputs.joint = io::load_joint(in.joint);
  if (!in.spec.empty() || !in.preset.empty()) {
    MixtureSpec spec = !in.spec.empty() ? io::mixture_from_json(io::load_json(in.spec)) : preset_spec(in.preset, seed);
    DiscretizeOptions d;
    d.bins_per_axis = in.bins;
    inputs.joint = discretize_exact(spec, d);
    inputs.spec = std::move(spec);
  }
  return inputs;
}

DiscreteJoint joint_of(const EstimateInputs& inputs) {
  return inputs.joint ? *inputs.joint : joint_from_conditional(*inputs.cond);
}

void warn_pruned(const EstimateInputs& inputs, std::ostream& err) {
  if (inputs.joint && (inputs.joint->pruned_rows() || inputs.joint->pruned_cols())) {
    err << "warning: pruned " << inputs.joint->pruned_rows() << " zero-mass rows and "
        << inputs.joint->pruned_cols() << " zero-mass columns\n";
  }
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// Config keys become long flags placed ahead of the explicit ones, which win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out = args;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] != "--config") continue;
    const json cfg = io::load_json(args[i + 1]);
    if (!cfg.is_object()) throw ValidationError("config: expected a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
      if (key == "config") throw ValidationError("config: nested 'config' key");
      const std::string flag = "--" + key;
      if (value.is_boolean()) {
        if (value.get<bool>()) tokens.push_back(flag);
      } else if (value.is_string()) {
        tokens.push_back(flag);
        tokens.push_back(value.get<std::string>());
      } else if (value.is_number()) {
        tokens.push_back(flag);
        tokens.push_back(value.dump());
      } else {
        throw ValidationError("config: key '" + key + "' must be a string, number or boolean");
      }
    }
    out.insert(out.begin() + 1, tokens.begin(), tokens.end());
    break;
  }
  return out;
}

// ---------------------------------------------------------------- estimate

struct EstimateFlags {
  Common common;
  InputFlags input;
  std::string method = "all";
  std::string search = "exhaustive";
  std::string family = "prefix";
  double tolerance = 1e-6;
  int iters = 20000;
  double lr = 1.0;
  std::string output = "estimate.json";
};

SubsetSearchOptions search_options(const std::string& search, const std::string& family, double tol) {
  SubsetSearchOptions s;
  s.strategy = search == "narrowing" ? SearchStrategy::narrowing : SearchStrategy::exhaustive;
  s.family = family == "range" ? SubsetFamily::range : SubsetFamily::prefix;
  s.tolerance = tol;
  return s;
}

int cmd_estimate(const EstimateFlags& f, std::ostream& out, std::ostream& err) {
  const EstimateInputs inputs = load_inputs(f.input, f.common.seed);
  warn_pruned(inputs, err);
  EstimateOptions opts;
  opts.subset = search_options(f.search, f.family, f.tolerance);
  opts.functional.iters = f.iters;
  opts.functional.lr = f.lr;
  opts.functional.seed = derive_seed(f.common.seed, 0xe57);
  const auto estimates = run_estimators(inputs, parse_selection(f.method), opts);

  json report = json::array();
  out << std::left << std::setw(26) << "method" << "beta0\n";
  for (const auto& e : estimates) {
    out << std::left << std::setw(26) << to_string(e.method) << fixed(e.value);
    if (e.diagnostics.count("diagnostic_only")) out << "  (diagnostic, not a bound)";
    if (auto w = e.diagnostics.find("warning"); w != e.diagnostics.end()) err << "warning: " << w->second << '\n';
    out << '\n';
    report.push_back(io::to_json(e));
  }
  io::write_text(output_dir(f.common) / f.output, json{{"estimates", report}}.dump(2) + "\n");
  return kSuccess;
}

// ------------------------------------------------------------------- sweep

struct SweepFlags {
  Common common;
  InputFlags input;
  double grid_lo = 0.0;
  double grid_hi = 0.0;
  std::size_t grid_n = 25;
  std::size_t z_card = 0;
  int restarts = 5;
  int max_iters = 5000;
  double tol = 1e-10;
  bool warm_start = false;
  bool serial = false;
  bool require_convergence = false;
  std::string output = "sweep";
};

int cmd_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  const EstimateInputs inputs = load_inputs(f.input, f.common.seed);
  warn_pruned(inputs, err);
  const DiscreteJoint joint = joint_of(inputs);

  json theory = json::object();
  std::optional<double> predicted;
  std::optional<double> vertical_line;
  try {
    const auto cond = inputs.cond ? *inputs.cond : conditional_from_joint(joint);
    predicted = subset_search(cond).beta0;
    theory["subset_search"] = *predicted;
    theory["max_correlation_inverse"] = max_correlation_estimate(joint).value;
    vertical_line = predicted;
    if (inputs.spec) {
      vertical_line = corollary_for_spec(*inputs.spec).value;
      theory["class_conditional"] = *vertical_line;
    }
  } catch (const IndependenceError& e) {
    err << "warning: " << e.what() << "; nothing is learnable at any beta\n";
  }

  std::vector<double> grid;
  if (f.grid_lo > 0.0 && f.grid_hi > f.grid_lo) {
    grid = geometric_grid(f.grid_lo, f.grid_hi, f.grid_n);
  } else if (predicted) {
    grid = default_beta_grid(*predicted, f.grid_n);
  } else {
    grid = geometric_grid(0.5, 5.0, f.grid_n);
  }

  SweepOptions so;
  so.solve.z_card = f.z_card;
  so.solve.restarts = f.restarts;
  so.solve.max_iters = f.max_iters;
  so.solve.tol = f.tol;
  so.solve.seed = derive_seed(f.common.seed, 0x5ee);
  so.warm_start = f.warm_start;
  so.execution = f.serial ? Execution::serial : Execution::parallel;
  const SweepResult result = sweep(joint, grid, so);

  std::size_t unconverged = 0;
  for (const auto& p : result.points) unconverged += p.converged ? 0 : 1;

  json doc = io::to_json(result);
  doc["theoretical"] = theory;
  doc["vertical_line"] = vertical_line ? json(*vertical_line) : json(nullptr);
  doc["unconverged_points"] = unconverged;
  const fs::path dir = output_dir(f.common);
  std::ostringstream csv;
  io::write_sweep_csv(csv, result);
  io::write_text(dir / (f.output + ".csv"), csv.str());
  io::write_text(dir / (f.output + ".json"), doc.dump(2) + "\n");

  out << "beta          I(X;Z) nats   I(Y;Z) nats\n";
  for (const auto& p : result.points) {
    out << std::left << std::setw(14) << fixed(p.beta) << std::setw(14) << fixed(p.i_xz, 6) << fixed(p.i_yz, 6)
        << '\n';
  }
  if (result.detected_beta0) {
    out << "detected onset: " << fixed(*result.detected_beta0) << '\n';
  } else {
    out << "detected onset: none\n";
    err << "warning: no onset detected on this grid\n";
  }
  if (vertical_line) out << "theoretical:    " << fixed(*vertical_line) << '\n';
  if (unconverged) {
    err << "warning: " << unconverged << " grid points hit the iteration cap\n";
    if (f.require_convergence) throw NonConvergence("sweep: solver did not converge at every grid point");
  }
  return kSuccess;
}

// --------------------------------------------------------------------- gen

struct GenFlags {
  Common common;
  std::string spec;
  std::string preset;
  std::size_t n = 10000;
  std::size_t bins = 32;
  std::string prefix = "dataset";
};

int cmd_gen(const GenFlags& f, std::ostream& out, std::ostream&) {
  if (f.spec.empty() == f.preset.empty()) throw ValidationError("give exactly one of --spec, --preset");
  MixtureSpec spec = !f.spec.empty() ? io::mixture_from_json(io::load_json(f.spec)) : preset_spec(f.preset);
  spec.seed = derive_seed(f.common.seed, 0x9e0);
  if (f.n == 0) throw ValidationError("--n must be positive");
  const SampleSet data = sample(spec, f.n);
  DiscretizeOptions d;
  d.bins_per_axis = f.bins;
  const DiscreteJoint exact = discretize_exact(spec, d);
  const ConditionalMatrix posterior = analytic_posterior(spec, data.points);

  const fs::path dir = output_dir(f.common);
  std::ostringstream samples_csv, joint_csv, posterior_csv;
  io::write_samples_csv(samples_csv, data);
  io::write_joint_csv(joint_csv, exact);
  io::write_conditional_csv(posterior_csv, posterior);
  io::write_text(dir / (f.prefix + "_samples.csv"), samples_csv.str());
  io::write_text(dir / (f.prefix + "_joint.csv"), joint_csv.str());
  io::write_text(dir / (f.prefix + "_posterior.csv"), posterior_csv.str());
  io::write_text(dir / (f.prefix + "_spec.json"), io::to_json(spec).dump(2) + "\n");
  out << "wrote " << f.n << " samples, a " << exact.size_x() << "x" << exact.size_y() << " exact joint and "
      << "posteriors under " << dir.string() << '\n';
  return kSuccess;
}

// ------------------------------------------------------------------- table

struct TableFlags {
  Common common;
  std::string rates;
  std::size_t samples = 10000;
  std::size_t bins = 32;
  bool no_true = false;
  bool no_learned = false;
  bool no_functional = false;
  bool with_sweep = false;
  std::string output = "noise_table";
};

std::string cell(const std::optional<double>& v) { return v ? fixed(*v, 2) : "-"; }

int cmd_table(const TableFlags& f, std::ostream& out, std::ostream&) {
  NoiseTableOptions opts;
  if (!f.rates.empty()) {
    std::stringstream ss(f.rates);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        opts.rates.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ValidationError("--rates: '" + item + "' is not a number");
      }
    }
  }
  opts.samples = f.samples;
  opts.bins = f.bins;
  opts.true_posterior = !f.no_true;
  opts.learned_posterior = !f.no_learned;
  opts.functional = !f.no_functional;
  opts.sweep = f.with_sweep;
  opts.seed = f.common.seed;
  const auto rows = noise_table(opts);

  std::ostringstream csv;
  csv << "noise_rate,corollary,subset_true_posterior,subset_learned_posterior,functional,observed_onset\n";
  json doc = json::array();
  out << std::left << std::setw(7) << "rate" << std::setw(11) << "corollary" << std::setw(14) << "subset(true)"
      << std::setw(17) << "subset(learned)" << std::setw(12) << "functional" << "observed\n";
  for (const auto& r : rows) {
    auto field = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
    csv << io::format_double(r.rate) << ',' << io::format_double(r.corollary) << ',' << field(r.subset_true) << ','
        << field(r.subset_learned) << ',' << field(r.functional) << ',' << field(r.observed) << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    doc.push_back({{"noise_rate", r.rate},
                   {"corollary", r.corollary},
                   {"subset_true_posterior", opt(r.subset_true)},
                   {"subset_learned_posterior", opt(r.subset_learned)},
                   {"functional", opt(r.functional)},
                   {"observed_onset", opt(r.observed)}});
    out << std::left << std::setw(7) << fixed(r.rate, 2) << std::setw(11) << fixed(r.corollary, 2)
        << std::setw(14) << cell(r.subset_true) << std::setw(17) << cell(r.subset_learned) << std::setw(12)
        << cell(r.functional) << cell(r.observed) << '\n';
  }
  const fs::path dir = output_dir(f.common);
  io::write_text(dir / (f.output + ".csv"), csv.str());
  io::write_text(dir / (f.output + ".json"), json{{"rows", doc}}.dump(2) + "\n");
  return kSuccess;
}

// ----------------------------------------------------------------- maxcorr

struct MaxcorrFlags {
  Common common;
  InputFlags input;
  std::string output = "maxcorr.json";
};

int cmd_maxcorr(const MaxcorrFlags& f, std::ostream& out, std::ostream& err) {
  const EstimateInputs inputs = load_inputs(f.input, f.common.seed);
  warn_pruned(inputs, err);
  const MaxCorrelation mc = max_correlation_svd(joint_of(inputs));
  json doc{{"rho_m", mc.rho}, {"top_singular_value", mc.top_singular}};
  out << "rho_m              " << fixed(mc.rho, 6) << '\n';
  out << "top singular value " << fixed(mc.top_singular, 9) << '\n';
  if (mc.rho > 1e-7) {
    doc["inverse_rho_m_squared"] = 1.0 / (mc.rho * mc.rho);
    out << "1/rho_m^2          " << fixed(1.0 / (mc.rho * mc.rho)) << '\n';
  } else {
    doc["inverse_rho_m_squared"] = nullptr;
  }
  io::write_text(output_dir(f.common) / f.output, doc.dump(2) + "\n");
  if (mc.rho <= 1e-7) throw IndependenceError("maximum correlation is zero: X independent of Y");
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Information Bottleneck learnability thresholds: estimators, tabular solver and beta sweeps", "ibl"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  EstimateFlags ef;
  auto* estimate = app.add_subcommand("estimate", "Theoretical beta0 estimates of a dataset");
  add_common(estimate, ef.common);
  add_inputs(estimate, ef.input);
  estimate->add_option("--method", ef.method, "all | comma list of subset,corollary,functional,maxcorr,info_density");
  estimate->add_option("--search", ef.search, "Subset search strategy")->check(CLI::IsMember({"exhaustive", "narrowing"}));
  estimate->add_option("--family", ef.family, "Subset family")->check(CLI::IsMember({"prefix", "range"}));
  estimate->add_option("--tolerance", ef.tolerance, "Relative improvement tolerance of the narrowing search");
  estimate->add_option("--iters", ef.iters, "Functional minimization steps");
  estimate->add_option("--lr", ef.lr, "Functional minimization step size in (0, 1]");
  estimate->add_option("--output", ef.output, "JSON report file name");

  SweepFlags sf;
  auto* sweep_cmd = app.add_subcommand("sweep", "Tabular IB solutions across a beta grid with onset detection");
  add_common(sweep_cmd, sf.common);
  add_inputs(sweep_cmd, sf.input);
  sweep_cmd->add_option("--grid-lo", sf.grid_lo, "Smallest beta (default: 0.54 x predicted)");
  sweep_cmd->add_option("--grid-hi", sf.grid_hi, "Largest beta (default: 1.62 x predicted)");
  sweep_cmd->add_option("--grid-n", sf.grid_n, "Number of geometric grid points")->check(CLI::Range(7, 100000));
  sweep_cmd->add_option("--z-card", sf.z_card, "Representation cardinality (default min(|X|, 2|Y|))");
  sweep_cmd->add_option("--restarts", sf.restarts, "Random restarts per beta");
  sweep_cmd->add_option("--max-iters", sf.max_iters, "Iteration cap per restart");
  sweep_cmd->add_option("--tol", sf.tol, "Max-norm encoder change declaring convergence");
  sweep_cmd->add_flag("--warm-start", sf.warm_start, "Anneal from the largest beta downwards");
  sweep_cmd->add_flag("--serial", sf.serial, "Run the serial reference path");
  sweep_cmd->add_flag("--require-convergence", sf.require_convergence, "Exit 3 if any grid point hits the cap");
  sweep_cmd->add_option("--output", sf.output, "Output file stem (.csv and .json)");

  GenFlags gf;
  auto* gen = app.add_subcommand("gen", "Generate samples, posteriors and the exact joint of a mixture");
  add_common(gen, gf.common);
  gen->add_option("--spec", gf.spec, "MixtureSpec JSON");
  gen->add_option("--preset", gf.preset, "noise-<rho> | deterministic | overlap-<distance>");
  gen->add_option("--n", gf.n, "Number of samples");
  gen->add_option("--bins", gf.bins, "Grid bins per axis")->check(CLI::Range(2, 4096));
  gen->add_option("--prefix", gf.prefix, "Output file prefix");

  TableFlags tf;
  auto* table = app.add_subcommand("table", "beta0 across class-conditional noise rates");
  add_common(table, tf.common);
  table->add_option("--rates", tf.rates, "Comma list of noise rates (default 0.02..0.48)");
  table->add_option("--samples", tf.samples, "Samples for the learned-posterior column");
  table->add_option("--bins", tf.bins, "Grid bins per axis")->check(CLI::Range(2, 4096));
  table->add_flag("--no-true", tf.no_true, "Skip subset search on exact posteriors");
  table->add_flag("--no-learned", tf.no_learned, "Skip the learned-posterior column");
  table->add_flag("--no-functional", tf.no_functional, "Skip functional minimization");
  table->add_flag("--sweep", tf.with_sweep, "Add the observed onset from a tabular sweep");
  table->add_option("--output", tf.output, "Output file stem (.csv and .json)");

  MaxcorrFlags mf;
  auto* maxcorr = app.add_subcommand("maxcorr", "Maximum correlation of a dataset via SVD");
  add_common(maxcorr, mf.common);
  add_inputs(maxcorr, mf.input);
  maxcorr->add_option("--output", mf.output, "JSON report file name");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<char*> argv;
    std::string name = "ibl";
    argv.push_back(name.data());
    for (auto& a : args) argv.push_back(a.data());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kSuccess : kInputError;
    }
    if (estimate->parsed()) return cmd_estimate(ef, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(sf, out, err);
    if (gen->parsed()) return cmd_gen(gf, out, err);
    if (table->parsed()) return cmd_table(tf, out, err);
    if (maxcorr->parsed()) return cmd_maxcorr(mf, out, err);
    return kInputError;
  } catch (const IndependenceError& e) {
    err << "error: " << e.what() << '\n';
    return kIndependent;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace ibl::cli
