#include "core/featurize.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "core/common.hpp"

namespace tabret {

std::vector<std::string> feature_schema(const FeatureConfig& config) {
    std::vector<std::string> names;
    if (config.designed) {
        names = designed_feature_names(config.aspects);
    }
    names.push_back("bm25");
    if (config.neural) {
        for (NeuralAspect a : kNeuralAspects) {
            Aspect src = source_aspect(a);
            bool enabled = std::find(config.aspects.begin(), config.aspects.end(), src) != config.aspects.end();
            if (enabled) names.push_back(std::string("nn_") + neural_aspect_name(a));
        }
    }
    return names;
}

FeatureSet featurize(const Corpus& corpus, const std::vector<Query>& queries, const Bm25Index& index,
                     const FeatureResources& resources, const NeuralModels* models,
                     const FeatureConfig& config) {
    if (!config.designed && !config.neural) {
        fail(ErrorKind::InvalidArgument, "featurize: at least one feature family must be enabled");
    }
    if (config.neural && !models) {
        fail(ErrorKind::State, "featurize: neural features enabled but no models supplied");
    }

    FeatureSet out;
    out.schema = feature_schema(config);
    std::vector<Aspect> designed_aspects = canonical_aspects(config.aspects);

    // Which neural models this configuration needs.
    std::vector<const AspectModel*> nn_models;
    if (config.neural) {
        for (NeuralAspect a : kNeuralAspects) {
            Aspect src = source_aspect(a);
            if (std::find(config.aspects.begin(), config.aspects.end(), src) == config.aspects.end()) continue;
            auto it = models->models.find(a);
            if (it == models->models.end()) {
                fail(ErrorKind::State, std::string("featurize: missing neural model for aspect '") +
                                           neural_aspect_name(a) + "'");
            }
            nn_models.push_back(&it->second);
        }
    }

    // Per-table caches, shared across queries.
    std::map<std::pair<NeuralAspect, std::string>, MemorySet> memory_cache;
    std::map<std::string, Eigen::VectorXd> caption_enc_cache;  // caption model encodings

    for (const Query& query : queries) {
        FeaturizedQuery fq;
        fq.query_id = query.id;
        fq.query_length = query.tokens.size();
        fq.relevant_ids = query.relevant_table_ids;
        std::set<std::string> relevant(query.relevant_table_ids.begin(), query.relevant_table_ids.end());

        std::vector<ScoredTable> candidates = index.retrieve_topk(query.tokens, config.topk);

        // One query encoding per (model, query).
        std::vector<Eigen::VectorXd> query_encodings(nn_models.size());
        for (size_t m = 0; m < nn_models.size(); ++m) {
            query_encodings[m] = encode_query(*nn_models[m], query.tokens);
        }

        for (const ScoredTable& cand : candidates) {
            const Table* table = corpus.find(cand.table_id);
            if (!table) fail(ErrorKind::NotFound, "featurize: candidate table not in corpus: " + cand.table_id);

            RankInstance inst;
            inst.table_id = cand.table_id;
            inst.label = relevant.count(cand.table_id) ? 1 : 0;
            if (config.designed) {
                inst.features = designed_feature_vector(query, *table, resources, designed_aspects);
            }
            inst.features.push_back(cand.score);
            for (size_t m = 0; m < nn_models.size(); ++m) {
                const AspectModel& model = *nn_models[m];
                if (model.aspect == NeuralAspect::Caption) {
                    auto [it, fresh] = caption_enc_cache.try_emplace(cand.table_id);
                    if (fresh) it->second = encode_caption(model, aspect_text(*table, Aspect::Caption));
                    inst.features.push_back(nn2_from_encodings(it->second, query_encodings[m], model));
                } else {
                    auto key = std::make_pair(model.aspect, cand.table_id);
                    auto [it, fresh] = memory_cache.try_emplace(key);
                    if (fresh) it->second = build_memory_set(*table, model);
                    inst.features.push_back(it->second.size() == 0
                                                ? 0.0
                                                : nn1_score(it->second.vectors, query_encodings[m], model));
                }
            }
            fq.candidates.push_back(std::move(inst));
        }
        out.queries.push_back(std::move(fq));
    }
    return out;
}

std::vector<QueryGroup> to_query_groups(const FeatureSet& features) {
    std::vector<QueryGroup> groups;
    groups.reserve(features.queries.size());
    for (const auto& fq : features.queries) {
        QueryGroup group;
        group.query_id = fq.query_id;
        group.instances = fq.candidates;
        groups.push_back(std::move(group));
    }
    return groups;
}

std::vector<RankedResult> rank_with_forest(const FeatureSet& features, const Forest& forest) {
    std::vector<RankedResult> results;
    results.reserve(features.queries.size());
    for (const auto& fq : features.queries) {
        RankedResult result;
        result.query_id = fq.query_id;
        result.query_length = fq.query_length;
        result.relevant_ids = fq.relevant_ids;
        std::vector<RankedCandidate> ranked = rank_candidates(forest, fq.candidates);
        for (const auto& cand : ranked) result.candidates.push_back({cand.table_id, cand.score});
        results.push_back(std::move(result));
    }
    return results;
}

std::vector<RankedResult> rank_by_feature(const FeatureSet& features, const std::string& feature_name) {
    auto it = std::find(features.schema.begin(), features.schema.end(), feature_name);
    if (it == features.schema.end()) {
        fail(ErrorKind::InvalidArgument, "rank_by_feature: unknown feature '" + feature_name + "'");
    }
    size_t column = static_cast<size_t>(it - features.schema.begin());

    std::vector<RankedResult> results;
    results.reserve(features.queries.size());
    for (const auto& fq : features.queries) {
        RankedResult result;
        result.query_id = fq.query_id;
        result.query_length = fq.query_length;
        result.relevant_ids = fq.relevant_ids;
        for (const auto& cand : fq.candidates) {
            result.candidates.push_back({cand.table_id, cand.features[column]});
        }
        std::sort(result.candidates.begin(), result.candidates.end(),
                  [](const ScoredTable& a, const ScoredTable& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.table_id < b.table_id;
                  });
        results.push_back(std::move(result));
    }
    return results;
}

std::vector<NnExample> build_nn_examples(const Corpus& corpus, const std::vector<Query>& queries,
                                         const Bm25Index& index, size_t candidate_k,
                                         int negatives_per_positive, uint64_t seed) {
    if (negatives_per_positive < 0) fail(ErrorKind::InvalidArgument, "negatives_per_positive must be >= 0");
    std::mt19937_64 rng(derive_seed(seed, "nn-negatives"));

    std::vector<NnExample> examples;
    for (const Query& query : queries) {
        if (query.relevant_table_ids.empty()) continue;
        std::set<std::string> relevant(query.relevant_table_ids.begin(), query.relevant_table_ids.end());

        std::vector<const Table*> positives;
        for (const auto& rid : query.relevant_table_ids) {
            if (const Table* t = corpus.find(rid)) positives.push_back(t);
        }
        if (positives.empty()) continue;

        std::vector<ScoredTable> candidates = index.retrieve_topk(query.tokens, candidate_k);
        std::vector<const Table*> negative_pool;
        for (const auto& cand : candidates) {
            if (!relevant.count(cand.table_id)) negative_pool.push_back(corpus.find(cand.table_id));
        }

        for (const Table* pos : positives) {
            examples.push_back({query.tokens, pos, 1});
            int want = negatives_per_positive;
            if (!negative_pool.empty()) {
                std::uniform_int_distribution<size_t> pick(0, negative_pool.size() - 1);
                int from_pool = std::min<int>(want, static_cast<int>(negative_pool.size()));
                // sample without replacement when the pool is small
                if (static_cast<size_t>(want) >= negative_pool.size()) {
                    for (const Table* neg : negative_pool) examples.push_back({query.tokens, neg, 0});
                    want -= static_cast<int>(negative_pool.size());
                } else {
                    std::set<size_t> picked;
                    while (static_cast<int>(picked.size()) < from_pool) picked.insert(pick(rng));
                    for (size_t i : picked) examples.push_back({query.tokens, negative_pool[i], 0});
                    want = 0;
                }
            }
            // corpus-uniform fallback when candidates are scarce
            std::uniform_int_distribution<size_t> any(0, corpus.tables.size() - 1);
            int guard = 0;
            while (want > 0 && guard < 1000) {
                const Table& t = corpus.tables[any(rng)];
                ++guard;
                if (relevant.count(t.id)) continue;
                examples.push_back({query.tokens, &t, 0});
                --want;
            }
        }
    }
    return examples;
}

void FeatureSet::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write feature file: " + path);
    out.precision(17);
    out << "tabret-features v1\n";
    out << "schema " << schema.size();
    for (const auto& name : schema) out << " " << name;
    out << "\n";
    out << "queries " << queries.size() << "\n";
    for (const auto& fq : queries) {
        out << "query " << fq.query_id << " " << fq.query_length << " " << fq.relevant_ids.size();
        for (const auto& rid : fq.relevant_ids) out << " " << rid;
        out << " " << fq.candidates.size() << "\n";
        for (const auto& cand : fq.candidates) {
            out << cand.table_id << " " << cand.label;
            for (double v : cand.features) out << " " << v;
            out << "\n";
        }
    }
}

FeatureSet FeatureSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open feature file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tabret-features v1") {
        fail(ErrorKind::Parse, "not a tabret-features v1 file: " + path);
    }
    FeatureSet fs;
    size_t schema_size = 0, num_queries = 0;
    {
        std::getline(in, line);
        std::istringstream ss(line);
        std::string key;
        ss >> key >> schema_size;
        if (key != "schema") fail(ErrorKind::Parse, "feature file missing schema line");
        for (size_t i = 0; i < schema_size; ++i) {
            std::string name;
            if (!(ss >> name)) fail(ErrorKind::Parse, "feature file: truncated schema");
            fs.schema.push_back(name);
        }
    }
    {
        std::getline(in, line);
        std::istringstream ss(line);
        std::string key;
        ss >> key >> num_queries;
        if (key != "queries") fail(ErrorKind::Parse, "feature file missing queries line");
    }
    for (size_t q = 0; q < num_queries; ++q) {
        if (!std::getline(in, line)) fail(ErrorKind::Parse, "feature file: truncated queries");
        std::istringstream ss(line);
        std::string key;
        FeaturizedQuery fq;
        size_t num_relevant = 0, num_cands = 0;
        ss >> key >> fq.query_id >> fq.query_length >> num_relevant;
        if (key != "query") fail(ErrorKind::Parse, "feature file: bad query line: " + line);
        for (size_t i = 0; i < num_relevant; ++i) {
            std::string rid;
            ss >> rid;
            fq.relevant_ids.push_back(rid);
        }
        ss >> num_cands;
        for (size_t c = 0; c < num_cands; ++c) {
            if (!std::getline(in, line)) fail(ErrorKind::Parse, "feature file: truncated candidates");
            std::istringstream cs(line);
            RankInstance inst;
            cs >> inst.table_id >> inst.label;
            double v = 0.0;
            while (cs >> v) inst.features.push_back(v);
            if (inst.features.size() != fs.schema.size()) {
                fail(ErrorKind::Parse, "feature file: candidate row for " + inst.table_id +
                                           " has wrong feature count");
            }
            fq.candidates.push_back(std::move(inst));
        }
        fs.queries.push_back(std::move(fq));
    }
    return fs;
}

}  // namespace tabret
