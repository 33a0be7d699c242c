#include "convsearch/distill.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "convsearch/errors.hpp"

namespace convsearch {

using nlohmann::json;

namespace {

// Pulls the instance's context turns and query back out of a rendered
// prompt. Few-shot examples embed their own fences, so only the last
// context block and the last "Query:" line belong to the instance.
struct PromptFields {
  std::vector<Turn> history;
  std::string query;
};

PromptFields parse_prompt(const std::string& prompt) {
  PromptFields fields;
  constexpr std::string_view kBegin = "### Context Begin ###";
  constexpr std::string_view kEnd = "### Context End ###";
  std::size_t begin = prompt.rfind(kBegin);
  std::size_t end = prompt.rfind(kEnd);
  if (begin == std::string::npos || end == std::string::npos || end < begin) {
    throw Error::data("prompt has no context block");
  }
  std::string block = prompt.substr(begin + kBegin.size(), end - (begin + kBegin.size()));
  std::istringstream lines(block);
  std::string line;
  Turn current;
  bool has_query = false;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line[0] == 'Q' && line.find(": ") != std::string::npos) {
      current.query = line.substr(line.find(": ") + 2);
      has_query = true;
    } else if (line[0] == 'A' && line.find(": ") != std::string::npos && has_query) {
      current.answer = line.substr(line.find(": ") + 2);
      fields.history.push_back(current);
      current = Turn{};
      has_query = false;
    }
  }
  std::size_t query_pos = prompt.rfind("Query: ");
  if (query_pos == std::string::npos || query_pos < end) {
    throw Error::data("prompt has no query line");
  }
  std::string tail = prompt.substr(query_pos + 7);
  std::size_t newline = tail.find('\n');
  fields.query = newline == std::string::npos ? tail : tail.substr(0, newline);
  return fields;
}

}  // namespace

std::vector<std::string> TemplateGenerator::generate(const std::string& prompt, int n,
                                                     double /*temperature*/) {
  PromptFields fields = parse_prompt(prompt);
  auto candidates = candidate_rewrites(fields.history, fields.query, config_);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Round-robin over the candidate list; deterministic.
    const std::string& rewrite = candidates[static_cast<std::size_t>(i) % candidates.size()];
    std::string reasoning = "Applied rewrite template " +
                            std::to_string(static_cast<std::size_t>(i) % candidates.size()) +
                            " to decontextualize the query.";
    out.push_back(wrap_output(reasoning, rewrite));
  }
  return out;
}

RemoteGenerator::RemoteGenerator(RemoteGeneratorConfig config) : config_(std::move(config)) {
  // Split "scheme://host:port/path" into client base and request path.
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error::data("generator endpoint must include a scheme, got `" + config_.endpoint + "`");
  }
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = config_.endpoint;
    path_ = "/";
  } else {
    scheme_host_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

std::vector<std::string> RemoteGenerator::generate(const std::string& prompt, int n,
                                                   double temperature) {
  json body{{"model", config_.model},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"n", n},
            {"temperature", temperature}};

  httplib::Client client(scheme_host_);
  client.set_connection_timeout(config_.timeout_s);
  client.set_read_timeout(config_.timeout_s);
  if (!config_.token_env.empty()) {
    if (const char* token = std::getenv(config_.token_env.c_str())) {
      client.set_default_headers({{"Authorization", std::string("Bearer ") + token}});
    }
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
    }
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "generator returned HTTP " + std::to_string(res->status);
      continue;
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices")) {
      last_error = "generator returned malformed JSON";
      continue;
    }
    std::vector<std::string> out;
    for (const auto& choice : reply.at("choices")) {
      if (choice.contains("message") && choice.at("message").contains("content")) {
        out.push_back(choice.at("message").at("content").get<std::string>());
      } else if (choice.contains("text")) {
        out.push_back(choice.at("text").get<std::string>());
      }
    }
    out.resize(static_cast<std::size_t>(n));  // contract: exactly n strings
    return out;
  }
  throw Error::runtime("generation failed after " + std::to_string(config_.max_retries + 1) +
                       " attempts: " + last_error);
}

std::vector<RawGeneration> self_distill(std::span<const QueryInstance> instances,
                                        Generator& generator, const DistillConfig& config,
                                        DistillReport& report) {
  if (config.samples_per_instance < 1) {
    throw Error::data("samples_per_instance must be >= 1");
  }
  const std::vector<std::string> examples =
      config.examples.empty() ? std::vector<std::string>{default_few_shot_example()}
                              : config.examples;
  PromptTemplate tmpl = few_shot_template();

  report.instances = instances.size();
  std::vector<RawGeneration> out(instances.size() *
                                 static_cast<std::size_t>(config.samples_per_instance));

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> failed_instances{0};
  auto worker = [&] {
    while (true) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= instances.size()) return;
      std::string prompt = render_prompt(tmpl, instances[idx], examples);
      std::size_t base = idx * static_cast<std::size_t>(config.samples_per_instance);
      try {
        auto texts = generator.generate(prompt, config.samples_per_instance, config.temperature);
        for (int s = 0; s < config.samples_per_instance; ++s) {
          out[base + static_cast<std::size_t>(s)] =
              RawGeneration{idx, s, texts[static_cast<std::size_t>(s)], false};
        }
      } catch (const std::exception&) {
        failed_instances.fetch_add(1);
        for (int s = 0; s < config.samples_per_instance; ++s) {
          out[base + static_cast<std::size_t>(s)] = RawGeneration{idx, s, "", true};
        }
      }
    }
  };

  int workers = std::max(1, config.concurrency);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  report.failed_instances = failed_instances.load();
  for (const auto& r : out) {
    if (r.failed) {
      ++report.transport_failed;
    } else {
      ++report.generated;
    }
  }
  return out;
}

std::vector<FilteredGeneration> filter_format(std::span<const RawGeneration> raw,
                                              DistillReport& report) {
  std::vector<FilteredGeneration> out;
  for (const auto& r : raw) {
    if (r.failed) continue;
    ParsedOutput parsed = parse_output(r.text);
    if (!parsed.valid) {
      ++report.dropped_format;
      continue;
    }
    out.push_back(FilteredGeneration{r.instance_idx, r.sample_idx, std::move(parsed)});
  }
  report.format_valid = out.size();
  return out;
}

std::vector<SdSample> filter_rank1(std::span<const FilteredGeneration> filtered,
                                   std::span<const QueryInstance> instances,
                                   const SearchIndex& index, RetrievalMode mode,
                                   const DistillConfig& config, DistillReport& report) {
  std::vector<SdSample> out;
  std::vector<char> instance_done(instances.size(), 0);
  for (const auto& f : filtered) {
    const QueryInstance& inst = instances[f.instance_idx];
    if (config.dedupe_first && instance_done[f.instance_idx]) {
      ++report.dropped_dedupe;
      continue;
    }
    RankOutcome rank =
        index.rank_of_gold(mode, f.parsed.rewrite, inst.gold_passage_ids, config.depth);
    if (!rank || *rank != 1) {
      ++report.dropped_rank;
      continue;
    }
    instance_done[f.instance_idx] = 1;
    out.push_back(SdSample{inst.history, inst.current_query, f.parsed.reasoning,
                           f.parsed.rewrite});
  }
  report.retained = out.size();
  return out;
}

std::string DistillReport::to_json_string() const {
  return json{{"instances", instances},
              {"generated", generated},
              {"format_valid", format_valid},
              {"retained", retained},
              {"transport_failed", transport_failed},
              {"failed_instances", failed_instances},
              {"drop_reasons",
               {{"format_invalid", dropped_format},
                {"not_rank1", dropped_rank},
                {"dedupe", dropped_dedupe}}},
              {"retention_rate",
               generated == 0 ? 0.0
                              : static_cast<double>(retained) / static_cast<double>(generated)}}
      .dump(2);
}

void DistillReport::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  out << to_json_string() << "\n";
}

DistillReport run_sdpwu(std::span<const QueryInstance> instances, Generator& generator,
                        const SearchIndex& index, RetrievalMode mode,
                        const DistillConfig& config, const std::filesystem::path& sd_data_path,
                        const std::filesystem::path& report_path) {
  DistillReport report;
  auto raw = self_distill(instances, generator, config, report);
  auto valid = filter_format(raw, report);
  auto samples = filter_rank1(valid, instances, index, mode, config, report);
  save_sd_data(samples, sd_data_path);
  report.save(report_path);
  return report;
}

}  // namespace convsearch
