#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/format.hpp"
#include "convsearch/index_file.hpp"
#include "convsearch/policy.hpp"

namespace convsearch {

// Produces raw rewrite outputs for a rendered prompt. Must return exactly n
// strings; transport problems are reported by throwing.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<std::string> generate(const std::string& prompt, int n,
                                            double temperature) = 0;
};

// Offline generator: recovers the context turns and query from the rendered
// prompt and emits the rewrite-template candidates wrapped in the output
// protocol. Makes the whole pipeline runnable with no network.
class TemplateGenerator final : public Generator {
 public:
  explicit TemplateGenerator(CandidateConfig config = {}) : config_(config) {}
  std::vector<std::string> generate(const std::string& prompt, int n,
                                    double temperature) override;

 private:
  CandidateConfig config_;
};

// Chat-completions style HTTP client. The auth token is read from the
// environment variable named by `token_env` at request time and never
// serialized or logged.
struct RemoteGeneratorConfig {
  std::string endpoint;  // e.g. http://host:port/v1/chat/completions
  std::string model;
  std::string token_env;
  int timeout_s = 30;
  int max_retries = 2;
};

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(RemoteGeneratorConfig config);
  std::vector<std::string> generate(const std::string& prompt, int n,
                                    double temperature) override;

 private:
  RemoteGeneratorConfig config_;
  std::string scheme_host_;
  std::string path_;
};

struct DistillConfig {
  int samples_per_instance = 1;
  double temperature = 0.7;
  int concurrency = 1;                 // bounded in-flight generator calls
  std::vector<std::string> examples;   // few-shot examples; default example when empty
  bool dedupe_first = false;           // keep at most one retained sample per instance
  int depth = kDefaultSearchDepth;
};

struct RawGeneration {
  std::size_t instance_idx = 0;
  int sample_idx = 0;
  std::string text;
  bool failed = false;  // transport failure after retries
};

struct FilteredGeneration {
  std::size_t instance_idx = 0;
  int sample_idx = 0;
  ParsedOutput parsed;
};

struct DistillReport {
  std::size_t instances = 0;
  std::size_t generated = 0;      // |D^d|, successful raw outputs
  std::size_t format_valid = 0;   // |D^f|
  std::size_t retained = 0;       // |SD-DATA|
  std::size_t transport_failed = 0;
  std::size_t failed_instances = 0;
  std::size_t dropped_format = 0;
  std::size_t dropped_rank = 0;
  std::size_t dropped_dedupe = 0;

  std::string to_json_string() const;
  void save(const std::filesystem::path& path) const;
};

// Stage 1: few-shot prompting of the generator over every instance. Failed
// instances are recorded and skipped, the pipeline continues. Outputs are
// keyed by (instance, sample) so results are deterministic regardless of
// worker completion order.
std::vector<RawGeneration> self_distill(std::span<const QueryInstance> instances,
                                        Generator& generator, const DistillConfig& config,
                                        DistillReport& report);

// Stage 2: keep exactly the outputs with validate(text) = 1.
std::vector<FilteredGeneration> filter_format(std::span<const RawGeneration> raw,
                                              DistillReport& report);

// Stage 3: keep exactly the rewrites that rank a gold passage first.
std::vector<SdSample> filter_rank1(std::span<const FilteredGeneration> filtered,
                                   std::span<const QueryInstance> instances,
                                   const SearchIndex& index, RetrievalMode mode,
                                   const DistillConfig& config, DistillReport& report);

// Full SDPWU pass; persists SD-DATA and the report.
DistillReport run_sdpwu(std::span<const QueryInstance> instances, Generator& generator,
                        const SearchIndex& index, RetrievalMode mode,
                        const DistillConfig& config, const std::filesystem::path& sd_data_path,
                        const std::filesystem::path& report_path);

}  // namespace convsearch
