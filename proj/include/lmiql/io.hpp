#pragma once

#include <string>

#include <json.hpp>

#include "lmiql/env.hpp"
#include "lmiql/harness.hpp"
#include "lmiql/qmodel.hpp"
#include "lmiql/train_result.hpp"

namespace lmiql {

using Json = nlohmann::json;

/// Flat parameter record {format, version, n_phi, n_u, theta}.
Json params_to_json(const QParams& params);
QParams params_from_json(const Json& j);

Json policy_to_json(const AffinePolicy& policy);
AffinePolicy policy_from_json(const Json& j);

/// NaN fields are written as null.
Json train_result_to_json(const TrainResult& result);
TrainResult train_result_from_json(const Json& j);

Json run_record_to_json(const RunRecord& rec);

/// Unknown keys are rejected; missing keys keep their defaults.
Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);
ExperimentConfig load_config(const std::string& path);

/// Versioned column text: a header line with dimensions and seed, a meta line, column names,
/// then one row per sample at 17 significant digits.
std::string dataset_to_text(const Dataset& data);
Dataset dataset_from_text(const std::string& text);
void save_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace lmiql
