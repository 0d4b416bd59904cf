#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rismec/mlp.hpp"

namespace rismec {

using Json = nlohmann::json;

/// JSON codecs. Complex matrices are stored column-major as [re, im] pairs;
/// every document carries a "schema" tag checked on load.

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json config_to_json(const SystemConfig& config);
SystemConfig config_from_json(const Json& j);

Json channels_to_json(const ChannelSet& channels);
ChannelSet channels_from_json(const Json& j);

Json solution_to_json(const Solution& solution);
Solution solution_from_json(const Json& j);

Json model_to_json(const MlpModel& model);
MlpModel model_from_json(const Json& j);

Json scaler_to_json(const MinMaxScaler& scaler);
MinMaxScaler scaler_from_json(const Json& j);

Json surrogates_to_json(const SurrogateModels& models);
SurrogateModels surrogates_from_json(const Json& j);

Json load_json(const std::filesystem::path& path);
void save_json(const Json& j, const std::filesystem::path& path);

/// Two-column CSV (epoch, train_loss, val_loss).
void save_loss_csv(const FitResult& result, const std::filesystem::path& path);

}  // namespace rismec
