#include "convsearch/index_file.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "convsearch/errors.hpp"
#include "convsearch/hash.hpp"

namespace convsearch {

using nlohmann::json;

RetrievalMode parse_retrieval_mode(std::string_view name) {
  if (name == "sparse") return RetrievalMode::sparse;
  if (name == "dense") return RetrievalMode::dense;
  throw Error::data("unknown retrieval mode `" + std::string(name) + "`");
}

std::string retrieval_mode_name(RetrievalMode mode) {
  return mode == RetrievalMode::sparse ? "sparse" : "dense";
}

// Serialization needs access to index internals; kept out of the public API.
struct IndexSerde {
  static json tokenizer_json(const TokenizerConfig& t) {
    return json{{"lowercase", t.lowercase},
                {"stem", t.stem},
                {"remove_stopwords", t.remove_stopwords}};
  }

  static TokenizerConfig tokenizer_from(const json& j) {
    TokenizerConfig t;
    t.lowercase = j.at("lowercase").get<bool>();
    t.stem = j.at("stem").get<bool>();
    t.remove_stopwords = j.at("remove_stopwords").get<bool>();
    return t;
  }

  static json limits_json(const TruncationLimits& l) {
    return json{{"query_tokens", l.query_tokens},
                {"concatenated_tokens", l.concatenated_tokens},
                {"passage_tokens", l.passage_tokens}};
  }

  static TruncationLimits limits_from(const json& j) {
    TruncationLimits l;
    l.query_tokens = j.at("query_tokens").get<std::size_t>();
    l.concatenated_tokens = j.at("concatenated_tokens").get<std::size_t>();
    l.passage_tokens = j.at("passage_tokens").get<std::size_t>();
    return l;
  }

  static json to_json(const SearchIndex& index) {
    const InvertedIndex& s = index.sparse;
    json postings = json::object();
    for (const auto& [term, list] : s.postings_) {
      json arr = json::array();
      for (const auto& [ord, tf] : list) arr.push_back(json::array({ord, tf}));
      postings[term] = std::move(arr);
    }
    json j{{"format_version", kIndexFormatVersion},
           {"tokenizer", tokenizer_json(s.tokenizer_)},
           {"limits", limits_json(s.limits_)},
           {"bm25", json{{"k1", s.params_.k1}, {"b", s.params_.b}}},
           {"doc_count", s.ids_.size()},
           {"avgdl", s.avgdl_},
           {"ids", s.ids_},
           {"doc_len", s.doc_len_},
           {"postings", std::move(postings)}};
    if (index.dense) {
      const DenseIndex& d = *index.dense;
      const auto* hash = dynamic_cast<const HashEmbedder*>(&d.embedder());
      json dense{{"dim", d.dim()},
                 {"embedder", hash ? json{{"kind", "hash"}, {"seed", hash->seed()}}
                                   : json{{"kind", "external"}}},
                 {"vectors", json::array()}};
      for (Eigen::Index r = 0; r < d.vectors_.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < d.vectors_.cols(); ++c) row.push_back(d.vectors_(r, c));
        dense["vectors"].push_back(std::move(row));
      }
      j["dense"] = std::move(dense);
    }
    return j;
  }

  static SearchIndex from_json(const json& j) {
    int version = j.at("format_version").get<int>();
    if (version != kIndexFormatVersion) {
      throw Error::data("index format version " + std::to_string(version) +
                        " not supported (expected " + std::to_string(kIndexFormatVersion) + ")");
    }
    SearchIndex index;
    InvertedIndex& s = index.sparse;
    s.tokenizer_ = tokenizer_from(j.at("tokenizer"));
    s.limits_ = limits_from(j.at("limits"));
    s.params_.k1 = j.at("bm25").at("k1").get<double>();
    s.params_.b = j.at("bm25").at("b").get<double>();
    s.avgdl_ = j.at("avgdl").get<double>();
    s.ids_ = j.at("ids").get<std::vector<std::string>>();
    s.doc_len_ = j.at("doc_len").get<std::vector<std::uint32_t>>();
    for (std::size_t i = 0; i < s.ids_.size(); ++i) {
      s.ordinals_.emplace(s.ids_[i], static_cast<std::uint32_t>(i));
    }
    for (const auto& [term, arr] : j.at("postings").items()) {
      auto& list = s.postings_[term];
      for (const auto& entry : arr) {
        list.emplace_back(entry.at(0).get<std::uint32_t>(), entry.at(1).get<std::uint32_t>());
      }
    }
    if (j.contains("dense")) {
      const json& dj = j.at("dense");
      DenseIndex d;
      d.limits_ = s.limits_;
      d.ids_ = s.ids_;
      int dim = dj.at("dim").get<int>();
      const json& rows = dj.at("vectors");
      d.vectors_.resize(static_cast<Eigen::Index>(rows.size()), dim);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const json& row = rows[r];
        if (static_cast<int>(row.size()) != dim) {
          throw Error::data("dense vector row has wrong dimension");
        }
        for (int c = 0; c < dim; ++c) {
          d.vectors_(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)].get<double>();
        }
      }
      if (dj.at("embedder").at("kind").get<std::string>() == "hash") {
        d.embedder_ = std::make_shared<HashEmbedder>(
            dim, s.tokenizer_, dj.at("embedder").at("seed").get<std::uint64_t>());
      }
      index.dense = std::move(d);
    }
    return index;
  }
};

RankedList SearchIndex::retrieve(RetrievalMode mode, std::string_view query,
                                 std::size_t k) const {
  if (mode == RetrievalMode::sparse) return sparse.retrieve_topk(query, k);
  if (!dense) throw Error::data("index has no dense section");
  return dense->retrieve_topk(query, k);
}

RankOutcome SearchIndex::rank_of_gold(RetrievalMode mode, std::string_view query,
                                      std::span<const std::string> gold_ids, int depth) const {
  if (mode == RetrievalMode::sparse) return sparse.rank_of_gold(query, gold_ids, depth);
  if (!dense) throw Error::data("index has no dense section");
  return dense->rank_of_gold(query, gold_ids, depth);
}

std::uint64_t SearchIndex::fingerprint() const {
  return fnv1a64(index_to_json_string(*this));
}

SearchIndex build_search_index(const Corpus& corpus, TokenizerConfig tokenizer,
                               TruncationLimits limits, Bm25Params params,
                               std::optional<DenseConfig> dense) {
  SearchIndex index;
  index.sparse = InvertedIndex::build(corpus, tokenizer, limits, params);
  if (dense) {
    index.dense = DenseIndex::build(
        corpus, std::make_shared<HashEmbedder>(dense->dim, tokenizer, dense->seed), limits);
  }
  return index;
}

std::string index_to_json_string(const SearchIndex& index) {
  return IndexSerde::to_json(index).dump();
}

void save_index(const SearchIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error::runtime("cannot open " + path.string() + " for writing");
  out << index_to_json_string(index) << "\n";
}

SearchIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error::runtime("cannot open index file " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error::data("index file " + path.string() + " is not valid JSON");
  try {
    return IndexSerde::from_json(j);
  } catch (const json::exception& e) {
    throw Error::data("index file " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace convsearch
