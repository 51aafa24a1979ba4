#include "core/features.hpp"

#include <set>

#include "core/common.hpp"

namespace tabret {

double word_overlap(const std::vector<std::string>& aspect_tokens,
                    const std::vector<std::string>& query_tokens, const CorpusStats& stats,
                    OverlapDirection direction) {
    std::set<std::string> aspect_types(aspect_tokens.begin(), aspect_tokens.end());
    std::set<std::string> query_types(query_tokens.begin(), query_tokens.end());

    double shared = 0.0;
    for (const auto& w : aspect_types) {
        if (query_types.count(w)) shared += stats.idf(w);
    }
    double denom = 0.0;
    if (direction == OverlapDirection::TowardTable) {
        for (const auto& w : aspect_types) denom += stats.idf(w);
    } else {
        for (const auto& w : query_types) denom += stats.idf(w);
    }
    return denom == 0.0 ? 0.0 : shared / denom;
}

double phrase_feature(const std::vector<std::string>& aspect_tokens,
                      const std::vector<std::string>& query_tokens, const PhraseTable& pt,
                      int max_order) {
    if (max_order < 1) fail(ErrorKind::InvalidArgument, "phrase feature max order must be >= 1");
    double total = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        if (aspect_tokens.size() < static_cast<size_t>(n)) continue;
        if (query_tokens.size() < static_cast<size_t>(n)) continue;
        size_t aspect_grams = aspect_tokens.size() - n + 1;
        size_t query_grams = query_tokens.size() - n + 1;
        double sum = 0.0;
        for (size_t i = 0; i < aspect_grams; ++i) {
            std::string src_a = aspect_tokens[i];
            for (int w = 1; w < n; ++w) src_a += " " + aspect_tokens[i + w];
            for (size_t j = 0; j < query_grams; ++j) {
                std::string src_q = query_tokens[j];
                for (int w = 1; w < n; ++w) src_q += " " + query_tokens[j + w];
                sum += pt.paraphrase_score(src_a, src_q);
            }
        }
        total += sum / static_cast<double>(aspect_grams);
    }
    return total / static_cast<double>(max_order);
}

double avg_embedding_similarity(const std::vector<std::string>& aspect_tokens,
                                const std::vector<std::string>& query_tokens,
                                const EmbeddingTable& emb) {
    Eigen::VectorXd a = emb.average(aspect_tokens);
    Eigen::VectorXd q = emb.average(query_tokens);
    return cosine(a, q);
}

double cdssm_similarity(const std::vector<std::string>& aspect_tokens,
                        const std::vector<std::string>& query_tokens, const CdssmParams& params) {
    Eigen::VectorXd a = subword_encode(aspect_tokens, params);
    Eigen::VectorXd q = subword_encode(query_tokens, params);
    return cosine(a, q);
}

std::vector<Aspect> canonical_aspects(const std::vector<Aspect>& enabled) {
    std::vector<Aspect> out;
    for (Aspect a : {Aspect::Headers, Aspect::Cells, Aspect::Caption}) {
        for (Aspect e : enabled) {
            if (e == a) {
                out.push_back(a);
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> designed_feature_names(const std::vector<Aspect>& aspects) {
    std::vector<std::string> names;
    for (Aspect a : canonical_aspects(aspects)) {
        std::string prefix = aspect_name(a);
        for (const char* suffix : {"_wmt", "_wmq", "_pp", "_s1", "_s2"}) {
            names.push_back(prefix + suffix);
        }
    }
    return names;
}

std::vector<double> designed_feature_vector(const Query& query, const Table& table,
                                            const FeatureResources& resources,
                                            const std::vector<Aspect>& aspects) {
    if (!resources.stats) fail(ErrorKind::State, "designed features: missing resource 'corpus stats'");
    if (!resources.phrase_table) fail(ErrorKind::State, "designed features: missing resource 'phrase table'");
    if (!resources.embeddings) fail(ErrorKind::State, "designed features: missing resource 'embedding table'");
    if (!resources.encoder) fail(ErrorKind::State, "designed features: missing resource 'subword encoder'");

    std::vector<double> values;
    for (Aspect a : canonical_aspects(aspects)) {
        std::vector<std::string> tokens = aspect_text(table, a);
        if (tokens.empty() || query.tokens.empty()) {
            values.insert(values.end(), {0.0, 0.0, 0.0, 0.0, 0.0});
            continue;
        }
        values.push_back(word_overlap(tokens, query.tokens, *resources.stats, OverlapDirection::TowardTable));
        values.push_back(word_overlap(tokens, query.tokens, *resources.stats, OverlapDirection::TowardQuery));
        values.push_back(phrase_feature(tokens, query.tokens, *resources.phrase_table, resources.phrase_max_order));
        values.push_back(cdssm_similarity(tokens, query.tokens, *resources.encoder));
        values.push_back(avg_embedding_similarity(tokens, query.tokens, *resources.embeddings));
    }
    return values;
}

}  // namespace tabret
