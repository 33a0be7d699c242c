#include "convsearch/policy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "convsearch/errors.hpp"
#include "convsearch/format.hpp"
#include "convsearch/hash.hpp"

namespace convsearch {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 14> kPronouns = {
    "it", "he", "she", "they", "them", "him", "her", "its", "his", "their",
    "this", "that", "these", "those"};

// Question/function words never start or continue an entity, whatever their
// capitalization.
constexpr std::array<std::string_view, 16> kEntityStoplist = {
    "what", "where", "when", "why", "who", "how", "which", "did", "does",
    "do", "the", "a", "an", "is", "are", "was"};

bool in_entity_stoplist(std::string_view word) {
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kEntityStoplist.begin(), kEntityStoplist.end(), lower) !=
         kEntityStoplist.end();
}

bool is_pronoun(std::string_view word) {
  std::string lower(word);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::find(kPronouns.begin(), kPronouns.end(), lower) != kPronouns.end();
}

// Whitespace-separated words with surrounding punctuation stripped.
std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t lo = start, hi = i;
    while (lo < hi && !std::isalnum(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !std::isalnum(static_cast<unsigned char>(text[hi - 1]))) --hi;
    if (lo < hi) out.emplace_back(text.substr(lo, hi - lo));
  }
  return out;
}

bool starts_upper(std::string_view word) {
  return !word.empty() && std::isupper(static_cast<unsigned char>(word.front()));
}

void collect_entities(std::string_view text, int max_entities,
                      std::vector<std::string>& entities) {
  auto words = words_of(text);
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (std::find(entities.begin(), entities.end(), current) == entities.end() &&
        static_cast<int>(entities.size()) < max_entities) {
      entities.push_back(current);
    }
    current.clear();
  };
  for (const auto& w : words) {
    if (starts_upper(w) && !in_entity_stoplist(w)) {
      if (!current.empty()) current += " ";
      current += w;
    } else {
      flush();
    }
  }
  flush();
}

std::string join_words(std::span<const std::string> words, std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < std::min(count, words.size()); ++i) {
    if (!out.empty()) out += " ";
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> extract_entities(std::span<const Turn> history, int max_entities) {
  std::vector<std::string> entities;
  for (const auto& turn : history) {
    collect_entities(turn.query, max_entities, entities);
    collect_entities(turn.answer, max_entities, entities);
  }
  return entities;
}

std::vector<std::string> candidate_rewrites(std::span<const Turn> history,
                                            std::string_view query,
                                            const CandidateConfig& config) {
  std::vector<std::string> out;
  auto push = [&](std::string candidate) {
    if (candidate.empty()) return;
    if (static_cast<int>(out.size()) >= config.max_slots) return;
    if (std::find(out.begin(), out.end(), candidate) == out.end()) {
      out.push_back(std::move(candidate));
    }
  };

  push(std::string(query));

  // Pronoun substitution: replace the first pronoun word with each entity.
  auto query_words = words_of(query);
  std::size_t pronoun_pos = query_words.size();
  for (std::size_t i = 0; i < query_words.size(); ++i) {
    if (is_pronoun(query_words[i])) {
      pronoun_pos = i;
      break;
    }
  }
  if (pronoun_pos < query_words.size()) {
    for (const auto& entity : extract_entities(history, config.max_entities)) {
      std::string candidate;
      for (std::size_t i = 0; i < query_words.size(); ++i) {
        if (!candidate.empty()) candidate += " ";
        candidate += (i == pronoun_pos) ? entity : query_words[i];
      }
      push(std::move(candidate));
    }
  }

  // Query plus the most frequent non-stopword history keywords.
  if (!history.empty() && config.top_keywords > 0) {
    TokenizerConfig plain{.lowercase = true, .stem = false, .remove_stopwords = false};
    std::map<std::string, int> counts;
    std::vector<std::string> first_seen;
    for (const auto& turn : history) {
      for (const auto* text : {&turn.query, &turn.answer}) {
        for (auto& tok : tokenize(*text, plain)) {
          if (is_stopword(tok) || is_pronoun(tok) || in_entity_stoplist(tok)) continue;
          if (counts[tok]++ == 0) first_seen.push_back(tok);
        }
      }
    }
    std::stable_sort(first_seen.begin(), first_seen.end(),
                     [&](const std::string& a, const std::string& b) {
                       return counts[a] > counts[b];
                     });
    std::string keywords = join_words(first_seen, static_cast<std::size_t>(config.top_keywords));
    if (!keywords.empty()) push(std::string(query) + " " + keywords);
  }

  // Query plus the head of the previous answer.
  if (!history.empty() && config.answer_snippet_tokens > 0) {
    auto answer_words = words_of(history.back().answer);
    std::string snippet =
        join_words(answer_words, static_cast<std::size_t>(config.answer_snippet_tokens));
    if (!snippet.empty()) push(std::string(query) + " " + snippet);
  }

  return out;
}

ToyPolicy::ToyPolicy(ToyPolicyConfig config) : config_(std::move(config)) {
  if (config_.buckets < 1) throw Error::data("toy policy needs at least one bucket");
  if (config_.candidates.max_slots < 1) throw Error::data("toy policy needs at least one slot");
  logits_ = Eigen::MatrixXd::Zero(config_.buckets, config_.candidates.max_slots);
}

std::vector<std::string> ToyPolicy::candidates_for(std::span<const Turn> history,
                                                   std::string_view query) const {
  return candidate_rewrites(history, query, config_.candidates);
}

std::vector<std::string> ToyPolicy::candidates(const QueryInstance& instance) const {
  return candidates_for(instance.history, instance.current_query);
}

int ToyPolicy::bucket_for(std::span<const Turn> history, std::string_view query) const {
  std::string joined;
  for (const auto& turn : history) {
    joined += turn.query;
    joined += "\n";
    joined += turn.answer;
    joined += "\n";
  }
  joined += query;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& tok : tokenize(joined, config_.tokenizer, config_.concatenated_tokens)) {
    h = fnv1a64(tok, h);
    h = fnv1a64("\x1f", h);
  }
  return static_cast<int>(h % static_cast<std::uint64_t>(config_.buckets));
}

int ToyPolicy::bucket_of(const QueryInstance& instance) const {
  return bucket_for(instance.history, instance.current_query);
}

Eigen::VectorXd softmax_slots(const Eigen::VectorXd& row, int slots, double temperature) {
  if (slots < 1) throw Error::data("softmax needs at least one slot");
  if (!(temperature > 0.0)) throw Error::data("temperature must be positive");
  Eigen::VectorXd scaled = row.head(slots) / temperature;
  double max = scaled.maxCoeff();
  Eigen::VectorXd p = (scaled.array() - max).exp();
  return p / p.sum();
}

Eigen::VectorXd ToyPolicy::probs(const QueryInstance& instance, double temperature) const {
  int slots = static_cast<int>(candidates(instance).size());
  if (slots == 0) throw Error::data("instance `" + instance.qid() + "` has no candidates");
  return softmax_slots(logits_.row(bucket_of(instance)).transpose(), slots, temperature);
}

double ToyPolicy::log_prob(const QueryInstance& instance, int slot) const {
  int slots = static_cast<int>(candidates(instance).size());
  if (slot < 0 || slot >= slots) {
    throw Error::data("slot " + std::to_string(slot) + " out of range for instance `" +
                      instance.qid() + "`");
  }
  Eigen::VectorXd row = logits_.row(bucket_of(instance)).head(slots).transpose();
  double max = row.maxCoeff();
  double lse = max + std::log((row.array() - max).exp().sum());
  return row[slot] - lse;
}

double canonical_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<int> ToyPolicy::sample(const QueryInstance& instance, int n, double temperature,
                                   std::mt19937_64& rng) const {
  Eigen::VectorXd p = probs(instance, temperature);
  std::vector<int> slots(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = canonical_uniform(rng);
    double acc = 0.0;
    int chosen = static_cast<int>(p.size()) - 1;
    for (int s = 0; s < p.size(); ++s) {
      acc += p[s];
      if (u < acc) {
        chosen = s;
        break;
      }
    }
    slots[static_cast<std::size_t>(i)] = chosen;
  }
  return slots;
}

int ToyPolicy::argmax(const QueryInstance& instance) const {
  int slots = static_cast<int>(candidates(instance).size());
  if (slots == 0) throw Error::data("instance `" + instance.qid() + "` has no candidates");
  Eigen::VectorXd row = logits_.row(bucket_of(instance)).head(slots).transpose();
  int best = 0;
  for (int s = 1; s < slots; ++s) {
    if (row[s] > row[best]) best = s;
  }
  return best;
}

std::string ToyPolicy::raw_output(const QueryInstance& instance, int slot) const {
  auto cands = candidates(instance);
  if (slot < 0 || slot >= static_cast<int>(cands.size())) {
    throw Error::data("slot " + std::to_string(slot) + " out of range");
  }
  std::string reasoning = "Resolved the query against " +
                          std::to_string(instance.history.size()) +
                          " context turns using rewrite template " + std::to_string(slot) + ".";
  return wrap_output(reasoning, cands[static_cast<std::size_t>(slot)]);
}

void ToyPolicy::set_reference(Eigen::MatrixXd reference) {
  if (reference.rows() != logits_.rows() || reference.cols() != logits_.cols()) {
    throw Error::data("reference matrix shape mismatch");
  }
  reference_ = std::move(reference);
}

std::uint64_t ToyPolicy::config_fingerprint() const {
  std::uint64_t h = fnv1a64("toy-categorical");
  h = hash_combine(h, static_cast<std::uint64_t>(config_.buckets));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.candidates.max_slots));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.candidates.max_entities));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.candidates.top_keywords));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.candidates.answer_snippet_tokens));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.tokenizer.lowercase));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.tokenizer.stem));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.tokenizer.remove_stopwords));
  h = hash_combine(h, static_cast<std::uint64_t>(config_.concatenated_tokens));
  return h;
}

void ToyPolicy::save(const std::filesystem::path& path) const {
  json j{{"format_version", 1},
         {"kind", "toy-categorical"},
         {"buckets", config_.buckets},
         {"max_slots", config_.candidates.max_slots},
         {"max_entities", config_.candidates.max_entities},
         {"top_keywords", config_.candidates.top_keywords},
         {"answer_snippet_tokens", config_.candidates.answer_snippet_tokens},
         {"tokenizer",
          {{"lowercase", config_.tokenizer.lowercase},
           {"stem", config_.tokenizer.stem},
           {"remove_stopwords", config_.tokenizer.remove_stopwords}}},
         {"concatenated_tokens", config_.concatenated_tokens},
         {"config_fingerprint", config_fingerprint()}};
  auto matrix_json = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["logits"] = matrix_json(logits_);
  j["reference"] = reference_ ? matrix_json(*reference_) : json(nullptr);
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  out << j.dump() << "\n";
}

ToyPolicy ToyPolicy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open policy file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error::data("policy file " + path.string() + " is not valid JSON");
  if (j.at("format_version").get<int>() != 1 ||
      j.at("kind").get<std::string>() != "toy-categorical") {
    throw Error::data("unsupported policy checkpoint format in " + path.string());
  }
  ToyPolicyConfig cfg;
  cfg.buckets = j.at("buckets").get<int>();
  cfg.candidates.max_slots = j.at("max_slots").get<int>();
  cfg.candidates.max_entities = j.at("max_entities").get<int>();
  cfg.candidates.top_keywords = j.at("top_keywords").get<int>();
  cfg.candidates.answer_snippet_tokens = j.at("answer_snippet_tokens").get<int>();
  cfg.tokenizer.lowercase = j.at("tokenizer").at("lowercase").get<bool>();
  cfg.tokenizer.stem = j.at("tokenizer").at("stem").get<bool>();
  cfg.tokenizer.remove_stopwords = j.at("tokenizer").at("remove_stopwords").get<bool>();
  cfg.concatenated_tokens = j.at("concatenated_tokens").get<std::size_t>();
  ToyPolicy policy(cfg);
  auto matrix_from = [&](const json& rows) {
    Eigen::MatrixXd m(cfg.buckets, cfg.candidates.max_slots);
    if (static_cast<int>(rows.size()) != cfg.buckets) {
      throw Error::data("policy checkpoint logit shape mismatch");
    }
    for (int r = 0; r < cfg.buckets; ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (static_cast<int>(row.size()) != cfg.candidates.max_slots) {
        throw Error::data("policy checkpoint logit shape mismatch");
      }
      for (int c = 0; c < cfg.candidates.max_slots; ++c) {
        m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    return m;
  };
  policy.logits_ = matrix_from(j.at("logits"));
  if (!j.at("reference").is_null()) policy.reference_ = matrix_from(j.at("reference"));
  return policy;
}

WarmupStats mle_warmup(ToyPolicy& policy, std::span<const SdSample> sd_data) {
  WarmupStats stats;
  stats.samples = sd_data.size();
  if (sd_data.empty()) {
    // Nothing to fit: the policy stays uniform but still becomes the
    // reference snapshot.
    policy.set_reference(policy.snapshot());
    return stats;
  }
  Eigen::MatrixXd counts =
      Eigen::MatrixXd::Zero(policy.config().buckets, policy.config().candidates.max_slots);
  for (const auto& sample : sd_data) {
    auto cands = policy.candidates_for(sample.context, sample.query);
    auto it = std::find(cands.begin(), cands.end(), sample.rewrite);
    if (it == cands.end()) {
      ++stats.unmatched;
      continue;
    }
    int slot = static_cast<int>(it - cands.begin());
    int bucket = policy.bucket_for(sample.context, sample.query);
    counts(bucket, slot) += 1.0;
    ++stats.matched;
  }
  policy.logits() = (counts.array() + 1.0).log().matrix();
  policy.set_reference(policy.snapshot());
  return stats;
}

}  // namespace convsearch
