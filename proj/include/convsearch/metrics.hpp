#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "convsearch/ranking.hpp"

namespace convsearch {

// Binary relevance judgments: query id -> relevant passage ids.
struct Qrels {
  std::map<std::string, std::set<std::string>> relevant;
};

// Rankings under evaluation: query id -> RankedList (no duplicate passage
// ids within a query).
struct Run {
  std::map<std::string, RankedList> ranked;

  void add(const std::string& qid, RankedList list);  // validates duplicates
};

// Metrics follow trec-eval semantics with binary gains and a hard cutoff at
// k; the mean is taken over the queries present in the run, each of which
// must have a non-empty qrels entry. Queries with empty rankings score 0.
double mrr_at_k(const Run& run, const Qrels& qrels, int k);
double ndcg_at_k(const Run& run, const Qrels& qrels, int k);
double recall_at_k(const Run& run, const Qrels& qrels, int k);

// Per-query values, exposed for oracle comparison.
double mrr_single(const RankedList& ranked, const std::set<std::string>& relevant, int k);
double ndcg_single(const RankedList& ranked, const std::set<std::string>& relevant, int k);
double recall_single(const RankedList& ranked, const std::set<std::string>& relevant, int k);

// Standard TREC text formats: run lines are
// "qid Q0 docid rank score tag", qrels lines are "qid 0 docid 1". Scores are
// printed with enough digits to round-trip exactly.
void export_trec_run(const Run& run, const std::filesystem::path& path,
                     std::string_view tag = "convsearch");
void export_trec_qrels(const Qrels& qrels, const std::filesystem::path& path);
Run load_trec_run(const std::filesystem::path& path);
Qrels load_trec_qrels(const std::filesystem::path& path);

}  // namespace convsearch
