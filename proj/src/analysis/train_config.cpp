#include "iftkit/analysis/train_config.hpp"

#include "iftkit/common/error.hpp"

namespace iftkit::analysis {

BaseModel parse_base_model(std::string_view name) {
  if (name == "llama2_7b") return BaseModel::kLlama2_7b;
  if (name == "llama2_13b") return BaseModel::kLlama2_13b;
  if (name == "mistral_7b_v01") return BaseModel::kMistral7bV01;
  throw UsageError("unknown base model '" + std::string(name) +
                   "' (expected llama2_7b, llama2_13b or mistral_7b_v01)");
}

std::string_view base_model_name(BaseModel model) {
  switch (model) {
    case BaseModel::kLlama2_7b: return "llama2_7b";
    case BaseModel::kLlama2_13b: return "llama2_13b";
    case BaseModel::kMistral7bV01: return "mistral_7b_v01";
  }
  return "unknown";
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["base_model"] = base_model_name(base_model);
  j["dataset_name"] = dataset_name;
  j["data_size"] = data_size;
  j["num_gpus"] = num_gpus;
  j["epochs"] = epochs;
  j["lr"] = lr;
  j["scheduler"] = scheduler == LrScheduler::kCosine ? "cosine" : "linear";
  j["batch_size"] = batch_size;
  j["context_window"] = context_window;
  j["weight_decay"] = weight_decay;
  j["warmup_rate"] = warmup_rate;
  if (neftune_noise_level) j["neftune_noise_level"] = *neftune_noise_level;
  else j["neftune_noise_level"] = nullptr;
  return j;
}

const std::vector<TrainConfig>& train_config_table() {
  using enum BaseModel;
  using enum LrScheduler;
  // Full-dataset rows follow the 3-epoch cosine recipe; the 1k rows the
  // 15-epoch linear recipe.
  static const std::vector<TrainConfig> table = {
      {kLlama2_7b, "Evol-Instruct-70k", "70k", 4, 3, 2e-5, kCosine, 128, 512, 0.0, 0.3, {}},
      {kLlama2_7b, "Alpaca-52k", "52k", 4, 3, 2e-5, kCosine, 128, 512, 0.0, 0.3, {}},
      {kLlama2_7b, "AlpaGasus-9k", "9k", 4, 3, 2e-5, kCosine, 128, 512, 0.0, 0.3, {}},
      {kLlama2_7b, "Alpaca-9k-longest", "9k", 4, 3, 2e-5, kCosine, 128, 512, 0.0, 0.3, {}},
      {kLlama2_7b, "AlpaGasus-1k", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kLlama2_7b, "LIMA-1k", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kLlama2_7b, "Alpaca-1k-longest", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kLlama2_7b, "Evol-Instruct-AlpaGasus-1k", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1,
       0.0, {}},
      {kLlama2_7b, "Evol-Instruct-1k-longest", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1,
       0.0, {}},
      {kMistral7bV01, "Alpaca-52k", "52k", 4, 3, 4e-6, kCosine, 128, 512, 0.0, 0.3, {}},
      {kMistral7bV01, "AlpaGasus-1k", "1k", 4, 15, 2e-6, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kMistral7bV01, "LIMA-1k", "1k", 4, 15, 2e-6, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kMistral7bV01, "Alpaca-1k-longest", "1k", 4, 15, 2e-6, kLinear, 128, 2048, 0.1, 0.0,
       {}},
      {kLlama2_13b, "Alpaca-52k", "52k", 4, 5, 1e-5, kCosine, 128, 512, 0.0, 0.3, {}},
      {kLlama2_13b, "AlpaGasus-1k", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kLlama2_13b, "LIMA-1k", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0, {}},
      {kLlama2_13b, "Alpaca-1k-longest", "1k", 4, 15, 1e-5, kLinear, 128, 2048, 0.1, 0.0,
       {}},
  };
  return table;
}

int neftune_noise_level(BaseModel model) {
  return model == BaseModel::kLlama2_7b ? 5 : 3;
}

TrainConfig emit_train_config(BaseModel base_model, std::string_view dataset_name,
                              bool neftune) {
  for (const auto& row : train_config_table()) {
    if (row.base_model == base_model && row.dataset_name == dataset_name) {
      TrainConfig out = row;
      if (neftune) out.neftune_noise_level = neftune_noise_level(base_model);
      return out;
    }
  }
  std::string msg = "no hyperparameter row for (" + std::string(base_model_name(base_model)) +
                    ", " + std::string(dataset_name) + "); valid rows:";
  for (const auto& row : train_config_table()) {
    msg += " (" + std::string(base_model_name(row.base_model)) + ", " + row.dataset_name + ")";
  }
  throw ValidationError(msg);
}

}  // namespace iftkit::analysis
