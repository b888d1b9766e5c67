#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "noiselab/config.hpp"
#include "noiselab/data.hpp"
#include "noiselab/estimator.hpp"
#include "noiselab/metrics.hpp"
#include "noiselab/model.hpp"
#include "noiselab/noise.hpp"
#include "noiselab/pipeline.hpp"

namespace noiselab {

using Json = nlohmann::json;

Json to_json(const Dataset& d);
Dataset dataset_from_json(const Json& j);

Json to_json(const CorruptionRecord& r);
CorruptionRecord corruption_record_from_json(const Json& j);

Json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const Json& j);

Json to_json(const ModelParams& params);
ModelParams model_params_from_json(const Json& j);

Json to_json(const ObjectiveConfig& cfg);
ObjectiveConfig objective_config_from_json(const Json& j);

/// Missing keys keep their defaults; unknown keys are rejected.
Json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const Json& j);

Json to_json(const EstimatorModel& model);
EstimatorModel estimator_model_from_json(const Json& j);

Json to_json(const MetricSet& m);
Json to_json(const RunReport& report);
Json to_json(const std::vector<AblationRow>& rows);

/// epoch,phase,train_loss,val_acc
std::string curves_csv(const std::vector<EpochRecord>& curves);
/// forget_rate,fixed,applied_forget_rate,eta_hat,accuracy,macro_f1
std::string ablation_csv(const std::vector<AblationRow>& rows);

Json read_json_file(const std::filesystem::path& path);
/// Two-space indented dump followed by a newline.
void write_json_file(const std::filesystem::path& path, const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& d);

/// One loss per line; a non-numeric first line is treated as a header.
std::vector<double> read_loss_csv(const std::filesystem::path& path);

}  // namespace noiselab
