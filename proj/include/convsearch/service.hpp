#pragma once

#include <memory>
#include <string>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/index_file.hpp"
#include "convsearch/ranking.hpp"
#include "convsearch/reward.hpp"

namespace httplib {
class Server;
}

namespace convsearch {

// Reward scoring request: raw model output text is scored end to end
// (format validation, gold-rank lookup, shaped reward) so external trainers
// exercise the same penalty path as the in-process trainer.
struct ScoreRequest {
  std::vector<Turn> context;
  std::string current_query;
  std::string output_text;
  RetrievalMode mode = RetrievalMode::sparse;
  int depth = kDefaultSearchDepth;
  std::vector<std::string> gold_passage_ids;
};

struct ScoreResponse {
  bool format_ok = false;
  RankOutcome rank;
  double reward = 0.0;
  std::string variant;
  double latency_ms = 0.0;
};

// The library composition the service mirrors bit for bit:
// parse_output -> rank_of_gold -> full_reward.
ScoreResponse score_output(const SearchIndex& index, const RewardConfig& reward,
                           const ScoreRequest& request);

// HTTP endpoints over an immutable index:
//   POST /score    ScoreRequest -> ScoreResponse
//   POST /retrieve {query, k, mode} -> {results: [{id, score}]}
//   GET  /healthz  {status, index_fingerprint}; 503 until an index is loaded
// Malformed JSON gets 400 with a reason. All shared state is immutable after
// startup, so responses are deterministic and request order never matters.
class RewardService {
 public:
  RewardService(std::shared_ptr<const SearchIndex> index, RewardConfig reward);
  ~RewardService();

  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // Binds to the given port (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen_after_bind();
  void stop();

 private:
  std::shared_ptr<const SearchIndex> index_;
  RewardConfig reward_;
  std::unique_ptr<httplib::Server> server_;

  void route();
};

}  // namespace convsearch
