#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "convsearch/bm25.hpp"
#include "convsearch/distill.hpp"
#include "convsearch/grpo.hpp"
#include "convsearch/index_file.hpp"
#include "convsearch/policy.hpp"
#include "convsearch/reward.hpp"
#include "convsearch/tokenize.hpp"

namespace convsearch {

// Operator-facing configuration. Resolution order: CLI flag > config file >
// built-in default. Unknown keys anywhere in the file are rejected.
struct PipelineConfig {
  struct Paths {
    std::string corpus;
    std::string sessions;
    std::string index;
    std::string sd_data;
    std::string distill_report;
    std::string policy;
    std::string train_log;
    std::string report_csv;
  } paths;

  TokenizerConfig tokenizer;
  TruncationLimits limits;
  Bm25Params bm25;
  std::string bm25_profile = "topiocqa";  // topiocqa | qrecc | custom

  bool dense_enabled = true;
  DenseConfig dense;

  RewardConfig reward;
  int depth = kDefaultSearchDepth;

  ToyPolicyConfig policy;
  TrainConfig train;
  DistillConfig distill;
  RemoteGeneratorConfig generator;
  std::string generator_kind = "template";  // template | remote

  struct Serve {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string mode = "sparse";
  } serve;
};

// Built-in defaults as a JSON tree; the schema against which files and flag
// overrides are validated.
nlohmann::json config_defaults();

// Deep-merges `overlay` into `base`, rejecting any key path that does not
// exist in `base`.
nlohmann::json merge_config(nlohmann::json base, const nlohmann::json& overlay);

// defaults <- file (optional) <- flag overrides, then typed parsing.
PipelineConfig resolve_config(const std::optional<nlohmann::json>& file_config,
                              const nlohmann::json& flag_overrides);

PipelineConfig load_config(const std::filesystem::path& path,
                           const nlohmann::json& flag_overrides);

PipelineConfig config_from_json(const nlohmann::json& merged);

// Effective config for startup echo (secret values never live in the config;
// the generator token is only named by its environment variable).
std::string effective_config_dump(const nlohmann::json& merged);

}  // namespace convsearch
