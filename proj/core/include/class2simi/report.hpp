#pragma once

#include <string>
#include <vector>

#include "class2simi/pipeline.hpp"

namespace c2s {

/// Parses an experiment config from JSON text. Every field is optional and
/// falls back to its default; unknown keys are rejected with their path.
/// Malformed JSON or a wrong type surfaces as std::invalid_argument.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Full config echo, stable key order, two-space indent.
std::string config_to_json(const ExperimentConfig& cfg);

/// Run report as JSON with stable key order. With include_timing off the
/// wall-clock field is omitted so that two identical runs serialize to
/// identical bytes.
std::string report_to_json(const RunReport& rep, bool include_timing = true);

/// level,method,accuracy rows, one per point.
std::string robustness_to_csv(const std::vector<RobustnessPoint>& points);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace c2s
