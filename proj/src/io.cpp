#include "ibl/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ibl::io {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> read_rows(std::istream& is) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && ptr == end;
}

double number(const std::string& s, std::size_t line) {
  double v = 0.0;
  if (!parse_number(s, v)) {
    throw ValidationError("csv line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

std::size_t label(const std::string& s, std::size_t line) {
  const double v = number(s, line);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ValidationError("csv line " + std::to_string(line) + ": '" + s + "' is not a class index");
  }
  return static_cast<std::size_t>(v);
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ValidationError(std::string(what) + ": unknown key '" + key + "'");
  }
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ValidationError(std::string(what) + ": expected a non-empty matrix");
  const auto cols = j.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ValidationError(std::string(what) + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    }
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_conditional_csv(std::ostream& os, const ConditionalMatrix& cond) {
  for (const auto& name : cond.class_names()) os << name << ',';
  os << "weight\n";
  for (Eigen::Index i = 0; i < cond.rows().rows(); ++i) {
    for (Eigen::Index j = 0; j < cond.rows().cols(); ++j) os << format_double(cond.rows()(i, j)) << ',';
    os << format_double(cond.weights()[i]) << '\n';
  }
}

ConditionalMatrix read_conditional_csv(std::istream& is) {
  const auto rows = read_rows(is);
  if (rows.size() < 2) throw ValidationError("conditional csv: need a header and at least one row");
  const auto& header = rows.front();
  std::optional<std::size_t> weight_col;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "weight") {
      if (weight_col) throw ValidationError("conditional csv: duplicate weight column");
      weight_col = c;
    } else {
      names.push_back(header[c]);
    }
  }
  const auto n = static_cast<Eigen::Index>(rows.size() - 1);
  Eigen::MatrixXd probs(n, static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw ValidationError("conditional csv line " + std::to_string(r + 1) + ": wrong field count");
    }
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double v = number(rows[r][c], r + 1);
      if (weight_col && c == *weight_col) {
        weights[static_cast<Eigen::Index>(r - 1)] = v;
      } else {
        probs(static_cast<Eigen::Index>(r - 1), j++) = v;
      }
    }
  }
  return ConditionalMatrix(std::move(probs), std::move(weights), std::move(names));
}

void write_joint_csv(std::ostream& os, const DiscreteJoint& joint) {
  os << 'x';
  for (const auto& y : joint.y_labels()) os << ',' << y;
  os << '\n';
  for (Eigen::Index i = 0; i < joint.probs().rows(); ++i) {
    os << joint.x_labels()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < joint.probs().cols(); ++j) os << ',' << format_double(joint.probs()(i, j));
    os << '\n';
  }
}

DiscreteJoint read_joint_csv(std::istream& is) {
  const auto rows = read_rows(is);
  if (rows.empty()) throw ValidationError("joint csv: empty input");
  const bool labelled = rows.front().front() == "x";
  const std::size_t first = labelled ? 1 : 0;
  const std::size_t skip = labelled ? 1 : 0;
  const std::size_t width = rows.front().size();
  if (width <= skip || rows.size() <= first) throw ValidationError("joint csv: no probabilities");

  std::vector<std::string> xl, yl;
  if (labelled) yl.assign(rows.front().begin() + 1, rows.front().end());
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(rows.size() - first), static_cast<Eigen::Index>(width - skip));
  for (std::size_t r = first; r < rows.size(); ++r) {
    if (rows[r].size() != width) {
      throw ValidationError("joint csv line " + std::to_string(r + 1) + ": wrong field count");
    }
    if (labelled) xl.push_back(rows[r][0]);
    for (std::size_t c = skip; c < width; ++c) {
      probs(static_cast<Eigen::Index>(r - first), static_cast<Eigen::Index>(c - skip)) = number(rows[r][c], r + 1);
    }
  }
  return DiscreteJoint(std::move(probs), std::move(xl), std::move(yl));
}

void write_samples_csv(std::ostream& os, const SampleSet& samples) {
  os << "x1,x2,observed_label,true_label\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << format_double(samples.points(r, 0)) << ',' << format_double(samples.points(r, 1)) << ','
       << samples.observed_labels[i] << ',' << samples.true_labels[i] << '\n';
  }
}

SampleSet read_samples_csv(std::istream& is) {
  const auto rows = read_rows(is);
  if (rows.empty() || rows.front() != std::vector<std::string>{"x1", "x2", "observed_label", "true_label"}) {
    throw ValidationError("samples csv: expected header x1,x2,observed_label,true_label");
  }
  SampleSet s;
  const auto n = rows.size() - 1;
  s.points.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != 4) throw ValidationError("samples csv line " + std::to_string(r + 1) + ": need 4 fields");
    s.points(static_cast<Eigen::Index>(r - 1), 0) = number(rows[r][0], r + 1);
    s.points(static_cast<Eigen::Index>(r - 1), 1) = number(rows[r][1], r + 1);
    s.observed_labels.push_back(label(rows[r][2], r + 1));
    s.true_labels.push_back(label(rows[r][3], r + 1));
  }
  return s;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "beta,i_xz_nats,i_yz_nats,objective\n";
  for (const auto& p : result.points) {
    os << format_double(p.beta) << ',' << format_double(p.i_xz) << ',' << format_double(p.i_yz) << ','
       << format_double(p.objective) << '\n';
  }
}

json to_json(const MixtureSpec& spec) {
  json comps = json::array();
  for (const auto& c : spec.components) {
    comps.push_back({{"mean", {c.mean[0], c.mean[1]}},
                     {"variance", {c.variance[0], c.variance[1]}},
                     {"weight", c.weight},
                     {"class", c.class_id}});
  }
  json j{{"components", comps}, {"seed", spec.seed}};
  if (spec.noise) j["noise"] = matrix_json(*spec.noise);
  return j;
}

MixtureSpec mixture_from_json(const json& j) {
  require_keys(j, {"components", "noise", "seed"}, "mixture spec");
  MixtureSpec spec;
  try {
    if (!j.contains("components") || !j["components"].is_array()) {
      throw ValidationError("mixture spec: 'components' array required");
    }
    for (const auto& c : j["components"]) {
      require_keys(c, {"mean", "variance", "weight", "class"}, "mixture component");
      MixtureComponent comp;
      const auto mean = c.at("mean").get<std::vector<double>>();
      if (mean.size() != 2) throw ValidationError("mixture component: mean must have 2 entries");
      comp.mean = {mean[0], mean[1]};
      if (c.contains("variance")) {
        const auto var = c["variance"].get<std::vector<double>>();
        if (var.size() != 2) throw ValidationError("mixture component: variance must have 2 entries");
        comp.variance = {var[0], var[1]};
      }
      comp.weight = c.at("weight").get<double>();
      comp.class_id = c.at("class").get<std::size_t>();
      spec.components.push_back(comp);
    }
    if (j.contains("noise")) spec.noise = matrix_from_json(j["noise"], "mixture spec noise");
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mixture spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json to_json(const SubsetResult& subset) {
  return {{"beta0", subset.beta0},
          {"pivot_class", subset.pivot_class},
          {"member_indices", subset.member_indices},
          {"p_omega", subset.p_omega},
          {"p_y_given_omega", vector_json(subset.p_y_given_omega.probs())}};
}

json to_json(const BetaEstimate& estimate) {
  json j{{"method", to_string(estimate.method)}, {"value", estimate.value}};
  if (estimate.subset) j["subset"] = to_json(*estimate.subset);
  if (estimate.h_vector) j["h_vector"] = vector_json(*estimate.h_vector);
  j["diagnostics"] = estimate.diagnostics;
  return j;
}

json to_json(const SweepResult& result) {
  json pts = json::array();
  for (const auto& p : result.points) {
    pts.push_back({{"beta", p.beta},
                   {"i_xz_nats", p.i_xz},
                   {"i_yz_nats", p.i_yz},
                   {"objective", p.objective},
                   {"converged", p.converged}});
  }
  json j{{"points", pts},
         {"protocol",
          {{"baseline_points", result.protocol.baseline_points},
           {"sigma_multiplier", result.protocol.sigma_multiplier},
           {"floor_nats", result.protocol.floor}}},
         {"baseline_mean", result.baseline_mean},
         {"baseline_std", result.baseline_std}};
  j["detected_beta0"] = result.detected_beta0 ? json(*result.detected_beta0) : json(nullptr);
  return j;
}

json to_json(const MlpModel& model) {
  json layers = json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Eigen::VectorXd w = model.weights[l].reshaped();
    layers.push_back({{"weights", vector_json(w)}, {"biases", vector_json(model.biases[l])}});
  }
  return {{"layer_sizes", model.layer_sizes},
          {"layers", layers},
          {"input_mean", vector_json(model.input_mean)},
          {"input_scale", vector_json(model.input_scale)},
          {"config",
           {{"hidden", model.config.hidden},
            {"learning_rate", model.config.learning_rate},
            {"epochs", model.config.epochs},
            {"batch_size", model.config.batch_size},
            {"seed", model.config.seed}}}};
}

MlpModel model_from_json(const json& j) {
  require_keys(j, {"layer_sizes", "layers", "input_mean", "input_scale", "config"}, "model");
  MlpModel m;
  try {
    m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    const auto& layers = j.at("layers");
    if (m.layer_sizes.size() < 2 || layers.size() != m.layer_sizes.size() - 1) {
      throw ValidationError("model: layer count mismatch");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Eigen::VectorXd flat = vector_from_json(layers[l].at("weights"));
      const auto rows = static_cast<Eigen::Index>(m.layer_sizes[l + 1]);
      const auto cols = static_cast<Eigen::Index>(m.layer_sizes[l]);
      if (flat.size() != rows * cols) throw ValidationError("model: weight array has the wrong length");
      m.weights.emplace_back(flat.reshaped(rows, cols));
      m.biases.push_back(vector_from_json(layers[l].at("biases")));
    }
    m.input_mean = vector_from_json(j.at("input_mean"));
    m.input_scale = vector_from_json(j.at("input_scale"));
    if (j.contains("config")) {
      const auto& c = j["config"];
      m.config.hidden = c.at("hidden").get<std::vector<std::size_t>>();
      m.config.learning_rate = c.at("learning_rate").get<double>();
      m.config.epochs = c.at("epochs").get<std::size_t>();
      m.config.batch_size = c.at("batch_size").get<std::size_t>();
      m.config.seed = c.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  m.validate();
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

ConditionalMatrix load_conditional(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  return read_conditional_csv(in);
}

DiscreteJoint load_joint(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  return read_joint_csv(in);
}

SampleSet load_samples(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  return read_samples_csv(in);
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace ibl::io
