#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "core/table.hpp"
#include "core/text.hpp"

namespace tabret {

struct Posting {
    std::string table_id;
    uint32_t term_frequency = 0;
};

struct ScoredTable {
    std::string table_id;
    double score = 0.0;
};

// Inverted index with Okapi BM25 scoring over a configurable aspect set.
// Immutable after build; avg_doc_len and document frequencies are frozen at
// build time, so additions require a rebuild.
class Bm25Index {
public:
    Bm25Index() = default;

    static Bm25Index build(const Corpus& corpus, const std::vector<Aspect>& aspects,
                           double k1, double b);

    // BM25(q, t) = sum_i idf(x_i) * tf(x_i,t)*(k1+1) /
    //              (tf(x_i,t) + k1*(1 - b + b*|t|/avg_tl)),
    // summed over query token positions; zero-tf terms contribute 0.
    double score(const std::vector<std::string>& query_tokens, const std::string& table_id) const;

    // Top-k tables with score > 0, sorted by score descending, ties broken by
    // ascending table id. Matches an exhaustive scan of all indexed tables.
    std::vector<ScoredTable> retrieve_topk(const std::vector<std::string>& query_tokens, size_t k) const;

    const CorpusStats& stats() const { return stats_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    const std::vector<Aspect>& aspects() const { return stats_.aspect_config; }
    size_t num_tables() const { return doc_len_.size(); }
    bool has_table(const std::string& table_id) const { return doc_len_.count(table_id) > 0; }
    const std::unordered_map<std::string, size_t>& doc_lengths() const { return doc_len_; }

    void save(const std::string& path) const;
    static Bm25Index load(const std::string& path);

private:
    double term_score(double idf, double tf, double doc_len) const;

    std::unordered_map<std::string, std::vector<Posting>> postings_;  // sorted by table id
    std::unordered_map<std::string, size_t> doc_len_;
    CorpusStats stats_;
    double k1_ = 1.2;
    double b_ = 0.75;
};

}  // namespace tabret
