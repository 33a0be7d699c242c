#include "convsearch/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "convsearch/errors.hpp"

namespace convsearch {

namespace {

const std::set<std::string>& relevant_for(const Qrels& qrels, const std::string& qid) {
  auto it = qrels.relevant.find(qid);
  if (it == qrels.relevant.end() || it->second.empty()) {
    throw Error::data("query `" + qid + "` has no relevance judgments");
  }
  return it->second;
}

template <typename PerQuery>
double mean_over_run(const Run& run, const Qrels& qrels, PerQuery per_query) {
  if (run.ranked.empty()) throw Error::data("run is empty");
  double sum = 0.0;
  for (const auto& [qid, ranked] : run.ranked) {
    sum += per_query(ranked, relevant_for(qrels, qid));
  }
  return sum / static_cast<double>(run.ranked.size());
}

void check_k(int k) {
  if (k < 1) throw Error::data("metric cutoff k must be >= 1");
}

}  // namespace

void Run::add(const std::string& qid, RankedList list) {
  std::unordered_set<std::string_view> seen;
  for (const auto& entry : list) {
    if (!seen.insert(entry.id).second) {
      throw Error::data("duplicate passage `" + entry.id + "` in run for query `" + qid + "`");
    }
  }
  ranked[qid] = std::move(list);
}

double mrr_single(const RankedList& ranked, const std::set<std::string>& relevant, int k) {
  int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int i = 0; i < limit; ++i) {
    if (relevant.count(ranked[static_cast<std::size_t>(i)].id)) {
      return 1.0 / static_cast<double>(i + 1);
    }
  }
  return 0.0;
}

double ndcg_single(const RankedList& ranked, const std::set<std::string>& relevant, int k) {
  int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  double dcg = 0.0;
  for (int i = 0; i < limit; ++i) {
    if (relevant.count(ranked[static_cast<std::size_t>(i)].id)) {
      dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
  }
  int ideal = std::min<int>(k, static_cast<int>(relevant.size()));
  double idcg = 0.0;
  for (int i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

double recall_single(const RankedList& ranked, const std::set<std::string>& relevant, int k) {
  int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  int hits = 0;
  for (int i = 0; i < limit; ++i) {
    if (relevant.count(ranked[static_cast<std::size_t>(i)].id)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double mrr_at_k(const Run& run, const Qrels& qrels, int k) {
  check_k(k);
  return mean_over_run(run, qrels, [k](const RankedList& r, const std::set<std::string>& rel) {
    return mrr_single(r, rel, k);
  });
}

double ndcg_at_k(const Run& run, const Qrels& qrels, int k) {
  check_k(k);
  return mean_over_run(run, qrels, [k](const RankedList& r, const std::set<std::string>& rel) {
    return ndcg_single(r, rel, k);
  });
}

double recall_at_k(const Run& run, const Qrels& qrels, int k) {
  check_k(k);
  return mean_over_run(run, qrels, [k](const RankedList& r, const std::set<std::string>& rel) {
    return recall_single(r, rel, k);
  });
}

void export_trec_run(const Run& run, const std::filesystem::path& path, std::string_view tag) {
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  char score_buf[64];
  for (const auto& [qid, ranked] : run.ranked) {
    int rank = 0;
    for (const auto& entry : ranked) {
      ++rank;
      std::snprintf(score_buf, sizeof(score_buf), "%.17g", entry.score);
      out << qid << " Q0 " << entry.id << " " << rank << " " << score_buf << " " << tag << "\n";
    }
  }
}

void export_trec_qrels(const Qrels& qrels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  for (const auto& [qid, ids] : qrels.relevant) {
    for (const auto& id : ids) out << qid << " 0 " << id << " 1\n";
  }
}

Run load_trec_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open run file " + path.string());
  std::map<std::string, RankedList> ranked;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, q0, docid, rank_str, score_str, tag;
    if (!(ss >> qid >> q0 >> docid >> rank_str >> score_str >> tag)) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) + ": malformed run line");
    }
    double score = 0.0;
    auto [ptr, ec] = std::from_chars(score_str.data(), score_str.data() + score_str.size(), score);
    if (ec != std::errc{} || ptr != score_str.data() + score_str.size()) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) + ": bad score field");
    }
    ranked[qid].push_back({docid, score});
  }
  Run run;
  for (auto& [qid, list] : ranked) run.add(qid, std::move(list));
  return run;
}

Qrels load_trec_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open qrels file " + path.string());
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, zero, docid;
    int rel = 0;
    if (!(ss >> qid >> zero >> docid >> rel)) {
      throw Error::data(path.string() + ":" + std::to_string(lineno) + ": malformed qrels line");
    }
    if (rel > 0) qrels.relevant[qid].insert(docid);
  }
  return qrels;
}

}  // namespace convsearch
