#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace convsearch {

struct Passage {
  std::string id;
  std::string text;
};

struct Turn {
  std::string query;
  std::string answer;  // may be the literal sentinel "UNANSWERABLE"
};

struct Session {
  std::string id;
  std::vector<Turn> turns;
};

// Session plus per-turn gold passage labels (1-based turn index). Turns
// without labels stay in the session (they remain conversational context)
// but produce no QueryInstance.
struct LabeledSession {
  Session session;
  std::map<int, std::vector<std::string>> gold;
};

// One reformulation task: rewrite `current_query` given `history`.
struct QueryInstance {
  std::string session_id;
  int turn_index = 0;  // 1-based
  std::string current_query;
  std::vector<Turn> history;  // turns 1..turn_index-1
  std::vector<std::string> gold_passage_ids;

  std::string qid() const;  // "<session_id>#<turn_index>"
};

// Insertion-ordered passage collection with unique ids.
class Corpus {
 public:
  void add(Passage p);
  std::size_t size() const { return passages_.size(); }
  bool empty() const { return passages_.empty(); }
  bool contains(std::string_view id) const;
  const Passage* find(std::string_view id) const;
  const Passage& at_ordinal(std::size_t ordinal) const { return passages_.at(ordinal); }
  const std::vector<Passage>& passages() const { return passages_; }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Retained warm-up triplet: conversational context, query, and the
// reasoning/rewrite pair that passed format validation and ranked the gold
// passage first. Only the distill pipeline constructs these.
struct SdSample {
  std::vector<Turn> context;
  std::string query;
  std::string reasoning;
  std::string rewrite;

  bool operator==(const SdSample&) const = default;
};

// JSONL: {"id": str, "text": str} per line. Rejects duplicate ids and
// malformed lines (error messages carry the line number).
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// JSONL: {"id", "turns": [{"query","answer"}], "gold": [{"turn_index",
// "passage_ids"}]}. gold entries referencing turns out of range are errors.
std::vector<LabeledSession> load_sessions(const std::filesystem::path& path);
void save_sessions(const std::vector<LabeledSession>& sessions,
                   const std::filesystem::path& path);

// One instance per labeled turn; instance t carries turns 1..t-1 as history.
std::vector<QueryInstance> build_query_instances(const LabeledSession& session);
std::vector<QueryInstance> build_query_instances(const std::vector<LabeledSession>& sessions);

// Checks that every gold id of every instance exists in the corpus.
void validate_gold_ids(const std::vector<QueryInstance>& instances, const Corpus& corpus);

void save_sd_data(const std::vector<SdSample>& samples, const std::filesystem::path& path);
std::vector<SdSample> load_sd_data(const std::filesystem::path& path);

bool operator==(const Turn& a, const Turn& b);

}  // namespace convsearch
