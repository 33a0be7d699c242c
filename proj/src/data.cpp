#include "convsearch/data.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "convsearch/errors.hpp"

namespace convsearch {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  return out;
}

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error::data(path.string() + ":" + std::to_string(lineno) + ": malformed JSON line");
  }
  return j;
}

std::string require_string(const json& j, const char* key, const std::filesystem::path& path,
                           std::size_t lineno) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error::data(path.string() + ":" + std::to_string(lineno) + ": missing string field `" +
                      key + "`");
  }
  return j.at(key).get<std::string>();
}

json turn_to_json(const Turn& t) { return json{{"query", t.query}, {"answer", t.answer}}; }

Turn turn_from_json(const json& j, const std::filesystem::path& path, std::size_t lineno) {
  return Turn{require_string(j, "query", path, lineno), require_string(j, "answer", path, lineno)};
}

}  // namespace

bool operator==(const Turn& a, const Turn& b) {
  return a.query == b.query && a.answer == b.answer;
}

std::string QueryInstance::qid() const {
  return session_id + "#" + std::to_string(turn_index);
}

void Corpus::add(Passage p) {
  if (p.text.empty()) throw Error::data("passage `" + p.id + "` has empty text");
  auto [it, inserted] = by_id_.emplace(p.id, passages_.size());
  if (!inserted) throw Error::data("duplicate passage id `" + p.id + "`");
  passages_.push_back(std::move(p));
}

bool Corpus::contains(std::string_view id) const {
  return by_id_.find(std::string(id)) != by_id_.end();
}

const Passage* Corpus::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &passages_[it->second];
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = open_input(path);
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    try {
      corpus.add(Passage{require_string(j, "id", path, lineno),
                         require_string(j, "text", path, lineno)});
    } catch (const Error& e) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& p : corpus.passages()) {
    out << json{{"id", p.id}, {"text", p.text}}.dump() << "\n";
  }
}

std::vector<LabeledSession> load_sessions(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<LabeledSession> sessions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    LabeledSession ls;
    ls.session.id = require_string(j, "id", path, lineno);
    if (!j.contains("turns") || !j.at("turns").is_array() || j.at("turns").empty()) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) +
                        ": session `" + ls.session.id + "` needs a non-empty `turns` array");
    }
    for (const auto& t : j.at("turns")) {
      Turn turn = turn_from_json(t, path, lineno);
      if (turn.query.empty()) {
        throw Error::data(path.string() + ":" + std::to_string(lineno) +
                          ": empty query in session `" + ls.session.id + "`");
      }
      ls.session.turns.push_back(std::move(turn));
    }
    if (j.contains("gold")) {
      for (const auto& g : j.at("gold")) {
        if (!g.contains("turn_index") || !g.at("turn_index").is_number_integer()) {
          throw Error::data(path.string() + ":" + std::to_string(lineno) +
                            ": gold entry missing integer `turn_index`");
        }
        int turn_index = g.at("turn_index").get<int>();
        if (turn_index < 1 || turn_index > static_cast<int>(ls.session.turns.size())) {
          throw Error::data(path.string() + ":" + std::to_string(lineno) + ": gold turn_index " +
                            std::to_string(turn_index) + " out of range for session `" +
                            ls.session.id + "` with " + std::to_string(ls.session.turns.size()) +
                            " turns");
        }
        if (!g.contains("passage_ids") || !g.at("passage_ids").is_array() ||
            g.at("passage_ids").empty()) {
          throw Error::data(path.string() + ":" + std::to_string(lineno) +
                            ": gold entry for turn " + std::to_string(turn_index) +
                            " needs a non-empty `passage_ids` array");
        }
        auto& ids = ls.gold[turn_index];
        for (const auto& id : g.at("passage_ids")) ids.push_back(id.get<std::string>());
      }
    }
    sessions.push_back(std::move(ls));
  }
  return sessions;
}

void save_sessions(const std::vector<LabeledSession>& sessions,
                   const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& ls : sessions) {
    json turns = json::array();
    for (const auto& t : ls.session.turns) turns.push_back(turn_to_json(t));
    json gold = json::array();
    for (const auto& [turn_index, ids] : ls.gold) {
      gold.push_back(json{{"turn_index", turn_index}, {"passage_ids", ids}});
    }
    out << json{{"id", ls.session.id}, {"turns", turns}, {"gold", gold}}.dump() << "\n";
  }
}

std::vector<QueryInstance> build_query_instances(const LabeledSession& ls) {
  std::vector<QueryInstance> out;
  for (const auto& [turn_index, gold_ids] : ls.gold) {
    QueryInstance qi;
    qi.session_id = ls.session.id;
    qi.turn_index = turn_index;
    qi.current_query = ls.session.turns[static_cast<std::size_t>(turn_index - 1)].query;
    qi.history.assign(ls.session.turns.begin(),
                      ls.session.turns.begin() + (turn_index - 1));
    qi.gold_passage_ids = gold_ids;
    out.push_back(std::move(qi));
  }
  return out;
}

std::vector<QueryInstance> build_query_instances(const std::vector<LabeledSession>& sessions) {
  std::vector<QueryInstance> out;
  for (const auto& ls : sessions) {
    auto instances = build_query_instances(ls);
    out.insert(out.end(), std::make_move_iterator(instances.begin()),
               std::make_move_iterator(instances.end()));
  }
  return out;
}

void validate_gold_ids(const std::vector<QueryInstance>& instances, const Corpus& corpus) {
  for (const auto& qi : instances) {
    for (const auto& id : qi.gold_passage_ids) {
      if (!corpus.contains(id)) {
        throw Error::data("gold passage `" + id + "` of " + qi.qid() + " not in corpus");
      }
    }
  }
}

void save_sd_data(const std::vector<SdSample>& samples, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& s : samples) {
    json context = json::array();
    for (const auto& t : s.context) context.push_back(turn_to_json(t));
    out << json{{"context", context},
                {"query", s.query},
                {"reasoning", s.reasoning},
                {"rewrite", s.rewrite}}
               .dump()
        << "\n";
  }
}

std::vector<SdSample> load_sd_data(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<SdSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = parse_line(line, path, lineno);
    SdSample s;
    if (!j.contains("context") || !j.at("context").is_array()) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) +
                        ": missing `context` array");
    }
    for (const auto& t : j.at("context")) s.context.push_back(turn_from_json(t, path, lineno));
    s.query = require_string(j, "query", path, lineno);
    s.reasoning = require_string(j, "reasoning", path, lineno);
    s.rewrite = require_string(j, "rewrite", path, lineno);
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace convsearch
