#include "convsearch/service.hpp"

#include <chrono>

#include <httplib.h>
#include <json.hpp>

#include "convsearch/errors.hpp"
#include "convsearch/format.hpp"

namespace convsearch {

using nlohmann::json;

namespace {

ScoreRequest score_request_from_json(const json& j) {
  ScoreRequest req;
  if (j.contains("context")) {
    for (const auto& t : j.at("context")) {
      req.context.push_back(Turn{t.at("query").get<std::string>(),
                                 t.at("answer").get<std::string>()});
    }
  }
  if (j.contains("current_query")) req.current_query = j.at("current_query").get<std::string>();
  req.output_text = j.at("output_text").get<std::string>();
  if (j.contains("mode")) req.mode = parse_retrieval_mode(j.at("mode").get<std::string>());
  if (j.contains("depth")) req.depth = j.at("depth").get<int>();
  for (const auto& id : j.at("gold_passage_ids")) {
    req.gold_passage_ids.push_back(id.get<std::string>());
  }
  if (req.gold_passage_ids.empty()) throw Error::data("gold_passage_ids must be non-empty");
  if (req.depth < 1) throw Error::data("depth must be >= 1");
  return req;
}

json score_response_to_json(const ScoreResponse& res) {
  return json{{"format_ok", res.format_ok},
              {"rank", res.rank ? json(*res.rank) : json(nullptr)},
              {"reward", res.reward},
              {"variant", res.variant},
              {"latency_ms", res.latency_ms}};
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

ScoreResponse score_output(const SearchIndex& index, const RewardConfig& reward,
                           const ScoreRequest& request) {
  ScoreResponse res;
  ParsedOutput parsed = parse_output(request.output_text);
  res.format_ok = parsed.valid;
  if (parsed.valid) {
    res.rank = index.rank_of_gold(request.mode, parsed.rewrite, request.gold_passage_ids,
                                  request.depth);
  }
  res.reward = full_reward(res.rank, res.format_ok, reward);
  res.variant = variant_name(reward.variant);
  return res;
}

RewardService::RewardService(std::shared_ptr<const SearchIndex> index, RewardConfig reward)
    : index_(std::move(index)), reward_(reward), server_(std::make_unique<httplib::Server>()) {
  reward_.validate();
  route();
}

RewardService::~RewardService() { stop(); }

void RewardService::route() {
  server_->Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    if (!index_) {
      res.status = 503;
      res.set_content(json{{"status", "unavailable"}}.dump(), "application/json");
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(index_->fingerprint()));
    res.set_content(json{{"status", "ok"}, {"index_fingerprint", buf}}.dump(),
                    "application/json");
  });

  server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    if (!index_) {
      reply_error(res, 503, "index not loaded");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      reply_error(res, 400, "request body is not valid JSON");
      return;
    }
    try {
      auto start = std::chrono::steady_clock::now();
      ScoreRequest request = score_request_from_json(body);
      ScoreResponse response = score_output(*index_, reward_, request);
      response.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      res.set_content(score_response_to_json(response).dump(), "application/json");
    } catch (const json::exception& e) {
      reply_error(res, 400, std::string("bad request: ") + e.what());
    } catch (const Error& e) {
      reply_error(res, 400, e.what());
    }
  });

  server_->Post("/retrieve", [this](const httplib::Request& req, httplib::Response& res) {
    if (!index_) {
      reply_error(res, 503, "index not loaded");
      return;
    }
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      reply_error(res, 400, "request body is not valid JSON");
      return;
    }
    try {
      std::string query = body.at("query").get<std::string>();
      auto k = body.value("k", 10);
      if (k < 1) throw Error::data("k must be >= 1");
      RetrievalMode mode = parse_retrieval_mode(body.value("mode", "sparse"));
      RankedList ranked = index_->retrieve(mode, query, static_cast<std::size_t>(k));
      json results = json::array();
      for (const auto& entry : ranked) {
        results.push_back(json{{"id", entry.id}, {"score", entry.score}});
      }
      res.set_content(json{{"results", std::move(results)}}.dump(), "application/json");
    } catch (const json::exception& e) {
      reply_error(res, 400, std::string("bad request: ") + e.what());
    } catch (const Error& e) {
      reply_error(res, 400, e.what());
    }
  });
}

int RewardService::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error::runtime("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error::runtime("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void RewardService::listen_after_bind() { server_->listen_after_bind(); }

void RewardService::stop() {
  if (server_) server_->stop();
}

}  // namespace convsearch
