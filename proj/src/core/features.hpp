#pragma once

#include <string>
#include <vector>

#include "core/cdssm.hpp"
#include "core/embedding.hpp"
#include "core/phrase_table.hpp"
#include "core/table.hpp"
#include "core/text.hpp"

namespace tabret {

enum class OverlapDirection { TowardTable, TowardQuery };

// idf-weighted fraction of aspect word types that occur in the query,
// normalized by aspect types (toward-table) or query types (toward-query).
// Repeated words count once; an empty denominator yields 0.
double word_overlap(const std::vector<std::string>& aspect_tokens,
                    const std::vector<std::string>& query_tokens, const CorpusStats& stats,
                    OverlapDirection direction);

// Phrase-level paraphrase feature over n-gram orders 1..max_order. The
// order-n term averages the pairwise paraphrase scores of all aspect/query
// n-grams over the aspect's n-gram count; orders either side cannot form
// contribute 0 while max_order keeps normalizing the mean.
double phrase_feature(const std::vector<std::string>& aspect_tokens,
                      const std::vector<std::string>& query_tokens, const PhraseTable& pt,
                      int max_order);

// Cosine of the element-wise averages of the in-vocabulary token vectors;
// 0 whenever either side has no known token or a zero-norm average.
double avg_embedding_similarity(const std::vector<std::string>& aspect_tokens,
                                const std::vector<std::string>& query_tokens,
                                const EmbeddingTable& emb);

// Cosine of the sub-word encodings of the two token sequences.
double cdssm_similarity(const std::vector<std::string>& aspect_tokens,
                        const std::vector<std::string>& query_tokens, const CdssmParams& params);

struct FeatureResources {
    const CorpusStats* stats = nullptr;
    const PhraseTable* phrase_table = nullptr;
    const EmbeddingTable* embeddings = nullptr;
    const CdssmParams* encoder = nullptr;
    int phrase_max_order = 3;
};

// Canonical aspect order for feature vectors; intersected with the enabled
// set so ablations keep a stable schema.
std::vector<Aspect> canonical_aspects(const std::vector<Aspect>& enabled);

// Names of the designed scores, five per enabled aspect:
// `<aspect>_wmt,_wmq,_pp,_s1,_s2` in canonical aspect order.
std::vector<std::string> designed_feature_names(const std::vector<Aspect>& aspects);

// The designed half of the feature vector, aligned with
// designed_feature_names. Aspects whose token sequence is empty score 0 on
// all five features. Missing resources raise a configuration error naming
// the resource.
std::vector<double> designed_feature_vector(const Query& query, const Table& table,
                                            const FeatureResources& resources,
                                            const std::vector<Aspect>& aspects);

}  // namespace tabret
