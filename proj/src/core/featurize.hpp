#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/bm25.hpp"
#include "core/eval.hpp"
#include "core/features.hpp"
#include "core/lambdamart.hpp"
#include "core/neural.hpp"
#include "core/table.hpp"

namespace tabret {

struct FeatureConfig {
    std::vector<Aspect> aspects = {Aspect::Headers, Aspect::Cells, Aspect::Caption};
    bool designed = true;
    bool neural = true;
    size_t topk = 50;
    int phrase_max_order = 3;
};

// Fixed schema for a configuration: the designed scores per enabled aspect in
// canonical order, then the first-stage bm25 score, then the enabled neural
// scores (header, cell, row, column, caption).
std::vector<std::string> feature_schema(const FeatureConfig& config);

struct FeaturizedQuery {
    std::string query_id;
    size_t query_length = 0;
    std::vector<std::string> relevant_ids;
    std::vector<RankInstance> candidates;  // labels filled from relevant_ids
};

struct FeatureSet {
    std::vector<std::string> schema;
    std::vector<FeaturizedQuery> queries;

    void save(const std::string& path) const;
    static FeatureSet load(const std::string& path);
};

// Retrieves top-k candidates per query and computes the configured features
// for every (query, candidate) pair. Per-table encodings are cached across
// queries; outputs do not depend on evaluation order.
FeatureSet featurize(const Corpus& corpus, const std::vector<Query>& queries, const Bm25Index& index,
                     const FeatureResources& resources, const NeuralModels* models,
                     const FeatureConfig& config);

std::vector<QueryGroup> to_query_groups(const FeatureSet& features);

// Rank every query's candidates with the forest (or by one named feature
// column) and package the result for evaluation.
std::vector<RankedResult> rank_with_forest(const FeatureSet& features, const Forest& forest);
std::vector<RankedResult> rank_by_feature(const FeatureSet& features, const std::string& feature_name);

// Training examples for the neural matcher: every (query, relevant table)
// pair, plus negatives sampled uniformly from the query's top candidates
// (relevant tables excluded), falling back to corpus-uniform sampling when
// the candidate list is too short.
std::vector<NnExample> build_nn_examples(const Corpus& corpus, const std::vector<Query>& queries,
                                         const Bm25Index& index, size_t candidate_k,
                                         int negatives_per_positive, uint64_t seed);

}  // namespace tabret
