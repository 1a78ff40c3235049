#pragma once

// CSV and JSON formats for the library's data types.
//
// ConditionalMatrix CSV: header of class names, optional `weight` column.
// DiscreteJoint CSV: header `x,<y labels...>`, one row per x value. A table of
// bare numbers without header is also accepted on read.
// SampleSet CSV: x1,x2,observed_label,true_label.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ibl/classifier.hpp"
#include "ibl/dist.hpp"
#include "ibl/estimators.hpp"
#include "ibl/ib_solver.hpp"
#include "ibl/synth.hpp"

namespace ibl::io {

using nlohmann::json;

void write_conditional_csv(std::ostream& os, const ConditionalMatrix& cond);
ConditionalMatrix read_conditional_csv(std::istream& is);

void write_joint_csv(std::ostream& os, const DiscreteJoint& joint);
DiscreteJoint read_joint_csv(std::istream& is);

void write_samples_csv(std::ostream& os, const SampleSet& samples);
SampleSet read_samples_csv(std::istream& is);

void write_sweep_csv(std::ostream& os, const SweepResult& result);

json to_json(const MixtureSpec& spec);
/// Rejects unknown keys.
MixtureSpec mixture_from_json(const json& j);

json to_json(const SubsetResult& subset);
json to_json(const BetaEstimate& estimate);
json to_json(const SweepResult& result);

json to_json(const MlpModel& model);
MlpModel model_from_json(const json& j);

// Path helpers; failures to open raise ValidationError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

ConditionalMatrix load_conditional(const std::filesystem::path& path);
DiscreteJoint load_joint(const std::filesystem::path& path);
SampleSet load_samples(const std::filesystem::path& path);
json load_json(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace ibl::io
