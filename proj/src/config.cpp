#include "convsearch/config.hpp"

#include <fstream>

#include "convsearch/errors.hpp"

namespace convsearch {

using nlohmann::json;

json config_defaults() {
  return json{
      {"paths",
       {{"corpus", ""},
        {"sessions", ""},
        {"index", ""},
        {"sd_data", ""},
        {"distill_report", ""},
        {"policy", ""},
        {"train_log", ""},
        {"report_csv", ""}}},
      {"tokenizer", {{"lowercase", true}, {"stem", true}, {"remove_stopwords", false}}},
      {"limits", {{"query_tokens", 64}, {"concatenated_tokens", 512}, {"passage_tokens", 384}}},
      {"bm25", {{"profile", "topiocqa"}, {"k1", 0.9}, {"b", 0.4}}},
      {"dense", {{"enabled", true}, {"dim", 256}, {"seed", 0}}},
      {"reward",
       {{"variant", "piecewise-linear"},
        {"format_penalty", -0.1},
        {"metric_k", 3},
        {"depth", 100},
        {"bands",
         {{"top_lo", 1},
          {"top_hi", 10},
          {"top_vlo", 1.0},
          {"top_vhi", 2.0},
          {"mid_hi", 100},
          {"mid_vlo", 0.0},
          {"mid_vhi", 1.0}}}}},
      {"policy",
       {{"buckets", 128},
        {"max_slots", 8},
        {"max_entities", 4},
        {"top_keywords", 3},
        {"answer_snippet_tokens", 8}}},
      {"train",
       {{"group_size", 8},
        {"temperature", 0.7},
        {"clip_eps", 0.2},
        {"kl_coef", 0.001},
        {"batch_size", 16},
        {"learning_rate", 0.3},
        {"epochs", 10},
        {"std_guard", 1e-6},
        {"seed", 0},
        {"max_steps", 0},
        {"lr_warmup", false},
        {"lr_warmup_steps", 100}}},
      {"distill",
       {{"samples_per_instance", 1},
        {"temperature", 0.7},
        {"concurrency", 1},
        {"dedupe_first", false},
        {"generator",
         {{"kind", "template"},
          {"endpoint", ""},
          {"model", ""},
          {"token_env", ""},
          {"timeout_s", 30},
          {"max_retries", 2}}}}},
      {"serve", {{"host", "127.0.0.1"}, {"port", 8080}, {"mode", "sparse"}}}};
}

namespace {

void merge_into(json& base, const json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw Error::data("config node `" + path + "` must be an object");
  for (const auto& [key, value] : overlay.items()) {
    std::string child = path.empty() ? key : path + "." + key;
    auto it = base.find(key);
    if (it == base.end()) throw Error::data("unknown config key `" + child + "`");
    if (it->is_object() && !it->empty()) {
      merge_into(*it, value, child);
    } else {
      *it = value;
    }
  }
}

}  // namespace

json merge_config(json base, const json& overlay) {
  merge_into(base, overlay, "");
  return base;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  const json& paths = j.at("paths");
  cfg.paths.corpus = paths.at("corpus").get<std::string>();
  cfg.paths.sessions = paths.at("sessions").get<std::string>();
  cfg.paths.index = paths.at("index").get<std::string>();
  cfg.paths.sd_data = paths.at("sd_data").get<std::string>();
  cfg.paths.distill_report = paths.at("distill_report").get<std::string>();
  cfg.paths.policy = paths.at("policy").get<std::string>();
  cfg.paths.train_log = paths.at("train_log").get<std::string>();
  cfg.paths.report_csv = paths.at("report_csv").get<std::string>();

  cfg.tokenizer.lowercase = j.at("tokenizer").at("lowercase").get<bool>();
  cfg.tokenizer.stem = j.at("tokenizer").at("stem").get<bool>();
  cfg.tokenizer.remove_stopwords = j.at("tokenizer").at("remove_stopwords").get<bool>();

  cfg.limits.query_tokens = j.at("limits").at("query_tokens").get<std::size_t>();
  cfg.limits.concatenated_tokens = j.at("limits").at("concatenated_tokens").get<std::size_t>();
  cfg.limits.passage_tokens = j.at("limits").at("passage_tokens").get<std::size_t>();

  cfg.bm25_profile = j.at("bm25").at("profile").get<std::string>();
  if (cfg.bm25_profile == "topiocqa") {
    cfg.bm25 = Bm25Params::topiocqa();
  } else if (cfg.bm25_profile == "qrecc") {
    cfg.bm25 = Bm25Params::qrecc();
  } else if (cfg.bm25_profile == "custom") {
    cfg.bm25.k1 = j.at("bm25").at("k1").get<double>();
    cfg.bm25.b = j.at("bm25").at("b").get<double>();
  } else {
    throw Error::data("bm25.profile must be topiocqa, qrecc or custom");
  }

  cfg.dense_enabled = j.at("dense").at("enabled").get<bool>();
  cfg.dense.dim = j.at("dense").at("dim").get<int>();
  cfg.dense.seed = j.at("dense").at("seed").get<std::uint64_t>();

  const json& reward = j.at("reward");
  cfg.reward.variant = parse_variant(reward.at("variant").get<std::string>());
  cfg.reward.format_penalty = reward.at("format_penalty").get<double>();
  cfg.reward.metric_k = reward.at("metric_k").get<int>();
  cfg.depth = reward.at("depth").get<int>();
  const json& bands = reward.at("bands");
  cfg.reward.bands.top_lo = bands.at("top_lo").get<int>();
  cfg.reward.bands.top_hi = bands.at("top_hi").get<int>();
  cfg.reward.bands.top_vlo = bands.at("top_vlo").get<double>();
  cfg.reward.bands.top_vhi = bands.at("top_vhi").get<double>();
  cfg.reward.bands.mid_hi = bands.at("mid_hi").get<int>();
  cfg.reward.bands.mid_vlo = bands.at("mid_vlo").get<double>();
  cfg.reward.bands.mid_vhi = bands.at("mid_vhi").get<double>();
  cfg.reward.validate();

  const json& policy = j.at("policy");
  cfg.policy.buckets = policy.at("buckets").get<int>();
  cfg.policy.candidates.max_slots = policy.at("max_slots").get<int>();
  cfg.policy.candidates.max_entities = policy.at("max_entities").get<int>();
  cfg.policy.candidates.top_keywords = policy.at("top_keywords").get<int>();
  cfg.policy.candidates.answer_snippet_tokens = policy.at("answer_snippet_tokens").get<int>();
  cfg.policy.tokenizer = cfg.tokenizer;
  cfg.policy.concatenated_tokens = cfg.limits.concatenated_tokens;

  const json& train = j.at("train");
  cfg.train.group_size = train.at("group_size").get<int>();
  cfg.train.temperature = train.at("temperature").get<double>();
  cfg.train.clip_eps = train.at("clip_eps").get<double>();
  cfg.train.kl_coef = train.at("kl_coef").get<double>();
  cfg.train.batch_size = train.at("batch_size").get<int>();
  cfg.train.learning_rate = train.at("learning_rate").get<double>();
  cfg.train.epochs = train.at("epochs").get<int>();
  cfg.train.std_guard = train.at("std_guard").get<double>();
  cfg.train.seed = train.at("seed").get<std::uint64_t>();
  cfg.train.max_steps = train.at("max_steps").get<int>();
  cfg.train.lr_warmup = train.at("lr_warmup").get<bool>();
  cfg.train.lr_warmup_steps = train.at("lr_warmup_steps").get<int>();
  cfg.train.depth = cfg.depth;
  cfg.train.validate();

  const json& distill = j.at("distill");
  cfg.distill.samples_per_instance = distill.at("samples_per_instance").get<int>();
  cfg.distill.temperature = distill.at("temperature").get<double>();
  cfg.distill.concurrency = distill.at("concurrency").get<int>();
  cfg.distill.dedupe_first = distill.at("dedupe_first").get<bool>();
  cfg.distill.depth = cfg.depth;
  const json& gen = distill.at("generator");
  cfg.generator_kind = gen.at("kind").get<std::string>();
  if (cfg.generator_kind != "template" && cfg.generator_kind != "remote") {
    throw Error::data("distill.generator.kind must be template or remote");
  }
  cfg.generator.endpoint = gen.at("endpoint").get<std::string>();
  cfg.generator.model = gen.at("model").get<std::string>();
  cfg.generator.token_env = gen.at("token_env").get<std::string>();
  cfg.generator.timeout_s = gen.at("timeout_s").get<int>();
  cfg.generator.max_retries = gen.at("max_retries").get<int>();

  cfg.serve.host = j.at("serve").at("host").get<std::string>();
  cfg.serve.port = j.at("serve").at("port").get<int>();
  cfg.serve.mode = j.at("serve").at("mode").get<std::string>();
  parse_retrieval_mode(cfg.serve.mode);
  return cfg;
}

PipelineConfig resolve_config(const std::optional<json>& file_config,
                              const json& flag_overrides) {
  json merged = config_defaults();
  if (file_config) merged = merge_config(std::move(merged), *file_config);
  merged = merge_config(std::move(merged), flag_overrides);
  return config_from_json(merged);
}

PipelineConfig load_config(const std::filesystem::path& path, const json& flag_overrides) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open config file " + path.string());
  json file = json::parse(in, nullptr, false);
  if (file.is_discarded()) throw Error::data("config file " + path.string() + " is not valid JSON");
  return resolve_config(file, flag_overrides);
}

std::string effective_config_dump(const json& merged) { return merged.dump(2); }

}  // namespace convsearch
