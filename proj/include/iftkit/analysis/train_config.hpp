#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace iftkit::analysis {

enum class BaseModel { kLlama2_7b, kLlama2_13b, kMistral7bV01 };
BaseModel parse_base_model(std::string_view name);
std::string_view base_model_name(BaseModel model);

enum class LrScheduler { kCosine, kLinear };

// One row of the fine-tuning hyperparameter table.
struct TrainConfig {
  BaseModel base_model;
  std::string dataset_name;
  std::string data_size;  // as published, e.g. "52k"
  int num_gpus;
  int epochs;
  double lr;
  LrScheduler scheduler;
  int batch_size;
  int context_window;
  double weight_decay;
  double warmup_rate;
  std::optional<int> neftune_noise_level;

  nlohmann::ordered_json to_json() const;
};

const std::vector<TrainConfig>& train_config_table();

// NEFTune noise level used with each base model: 5 for Llama-2-7B, 3 otherwise.
int neftune_noise_level(BaseModel model);

// The table row for (base_model, dataset_name), with neftune_noise_level set
// when `neftune` is true. Throws ValidationError listing the valid rows for
// an unknown pair.
TrainConfig emit_train_config(BaseModel base_model, std::string_view dataset_name,
                              bool neftune = false);

}  // namespace iftkit::analysis
