#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "core/common.hpp"

namespace tabret {

namespace {

// Wraps a stage so failures name the stage that died.
template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + name + ": " + e.what());
    }
}

}  // namespace

std::string setting_label(bool designed, bool neural) {
    if (designed && neural) return "Feature + NeuralNet";
    if (designed) return "Feature";
    if (neural) return "NeuralNet";
    return "BM25";
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    if (!config.designed && !config.neural) {
        fail(ErrorKind::InvalidArgument, "pipeline: enable at least one of designed/neural features");
    }
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    auto path = [&config](const std::string& name) { return (fs::path(config.out_dir) / name).string(); };

    // ingest
    CorpusLoadResult loaded = stage("ingest", [&] { return load_corpus(config.corpus_path); });
    const Corpus& corpus = loaded.corpus;
    std::vector<Query> queries = stage("ingest", [&] { return load_queries(config.queries_path); });

    // split
    DatasetSplit split = stage("split", [&] {
        return split_dataset(queries, config.train_ratio, config.val_ratio, config.test_ratio, config.seed);
    });
    save_queries(split.train, path("queries_train.jsonl"));
    save_queries(split.validation, path("queries_validation.jsonl"));
    save_queries(split.test, path("queries_test.jsonl"));

    // stats + index over the retrieval aspects
    Bm25Index index = stage("build-index", [&] {
        return Bm25Index::build(corpus, config.index_aspects, config.k1, config.b);
    });
    index.save(path("index.txt"));
    save_stats(index.stats(), path("index_stats.txt"));

    PipelineResult result;
    result.setting_label = setting_label(config.designed, config.neural);
    result.candidate_recall = stage("retrieve", [&] { return candidate_recall(index, queries, config.topk); });

    // resources for the designed features
    PhraseTable phrase_table;
    EmbeddingTable embeddings;
    CdssmParams encoder;
    CorpusStats feature_stats;
    if (config.designed) {
        phrase_table = stage("resources", [&] { return PhraseTable::load(config.phrase_table_path); });
        if (config.phrase_table_identities) phrase_table.add_identities();
        embeddings = stage("resources", [&] { return EmbeddingTable::load(config.embeddings_path); });
        // idf for the designed features always comes from the full table
        // content, independent of the retrieval aspect configuration
        feature_stats = stage("resources", [&] {
            return build_stats(corpus, {Aspect::Headers, Aspect::Cells, Aspect::Caption});
        });
        save_stats(feature_stats, path("feature_stats.txt"));

        CdssmConfig cdssm_config = config.cdssm;
        cdssm_config.seed = derive_seed(config.seed, "cdssm");
        CdssmTrainResult cdssm = stage("train-cdssm", [&] {
            auto pairs = load_paraphrase_pairs(config.paraphrases_path);
            return train_subword_encoder(pairs, cdssm_config);
        });
        encoder = std::move(cdssm.params);
        encoder.save(path("cdssm.bin"));
        std::ofstream trace(path("cdssm_loss.txt"));
        for (double l : cdssm.epoch_loss) trace << l << "\n";
    }

    // neural aspect models over the enabled feature aspects
    NeuralModels models;
    if (config.neural) {
        std::vector<NnExample> examples = stage("train-nn", [&] {
            return build_nn_examples(corpus, split.train, index, config.topk,
                                     config.nn_negatives_per_positive, config.seed);
        });
        NnTrainConfig nn_config = config.nn;
        nn_config.seed = derive_seed(config.seed, "nn");
        std::ofstream trace(path("nn_loss.txt"));
        for (NeuralAspect aspect : kNeuralAspects) {
            Aspect src = source_aspect(aspect);
            bool enabled = std::find(config.feature_aspects.begin(), config.feature_aspects.end(), src) !=
                           config.feature_aspects.end();
            if (!enabled) continue;
            NnTrainResult trained = stage(std::string("train-nn-") + neural_aspect_name(aspect),
                                          [&] { return train_aspect_model(examples, aspect, nn_config); });
            trace << neural_aspect_name(aspect);
            for (double l : trained.epoch_loss) trace << " " << l;
            trace << "\n";
            models.models[aspect] = std::move(trained.model);
        }
        models.save(path("nn_models.bin"));
    }

    // featurize all three splits
    FeatureConfig feature_config;
    feature_config.aspects = config.feature_aspects;
    feature_config.designed = config.designed;
    feature_config.neural = config.neural;
    feature_config.topk = config.topk;

    FeatureResources resources;
    resources.stats = &feature_stats;
    resources.phrase_table = &phrase_table;
    resources.embeddings = &embeddings;
    resources.encoder = &encoder;

    auto featurize_split = [&](const std::vector<Query>& qs) {
        return featurize(corpus, qs, index, resources, config.neural ? &models : nullptr, feature_config);
    };
    FeatureSet train_features = stage("featurize", [&] { return featurize_split(split.train); });
    FeatureSet val_features = stage("featurize", [&] { return featurize_split(split.validation); });
    FeatureSet test_features = stage("featurize", [&] { return featurize_split(split.test); });
    train_features.save(path("features_train.txt"));
    val_features.save(path("features_validation.txt"));
    test_features.save(path("features_test.txt"));

    // ranker
    std::vector<QueryGroup> train_groups = to_query_groups(train_features);
    LambdaMartConfig ranker_config = config.ranker;
    ranker_config.seed = derive_seed(config.seed, "ranker");
    LambdaMartResult ranker = stage("train-ranker", [&] {
        return fit_lambdamart(train_groups, train_features.schema, ranker_config);
    });
    ranker.forest.save(path("forest.txt"));
    result.ranker_train_map = ranker.train_map_trace;

    // validation MAP per checkpoint (every 10 trees) for inspection
    {
        std::vector<QueryGroup> val_groups = to_query_groups(val_features);
        std::ofstream trace(path("ranker_map.txt"));
        trace.precision(17);
        for (size_t t = 0; t < ranker.forest.trees.size(); ++t) {
            if ((t + 1) % 10 != 0 && t + 1 != ranker.forest.trees.size()) continue;
            Forest prefix;
            prefix.feature_names = ranker.forest.feature_names;
            prefix.trees.assign(ranker.forest.trees.begin(), ranker.forest.trees.begin() + t + 1);
            prefix.weights.assign(ranker.forest.weights.begin(), ranker.forest.weights.begin() + t + 1);
            std::vector<std::vector<double>> scores;
            for (const auto& group : val_groups) {
                std::vector<double> s;
                for (const auto& inst : group.instances) s.push_back(prefix.score(inst.features));
                scores.push_back(std::move(s));
            }
            double val_map = mean_average_precision(val_groups, scores);
            result.ranker_val_map.push_back(val_map);
            trace << "trees " << t + 1 << " train_map " << ranker.train_map_trace[t] << " val_map "
                  << val_map << "\n";
        }
    }

    // evaluate on the test split
    std::vector<RankedResult> ranked = stage("evaluate", [&] {
        return rank_with_forest(test_features, ranker.forest);
    });
    std::vector<RankedResult> bm25_ranked = stage("evaluate", [&] {
        return rank_by_feature(test_features, "bm25");
    });
    write_ranked_results(ranked, path("ranked_test.jsonl"));

    result.report = evaluate(ranked, config.filter_eval);
    result.bm25_report = evaluate(bm25_ranked, config.filter_eval);
    result.report.pr_points = pr_curve(ranked, default_threshold_grid(ranked));
    result.report.length_buckets = length_bucket_report(ranked);

    write_report_json(result.report, result.setting_label, &result.bm25_report, path("report.json"));
    write_report_text(result.report, result.setting_label, &result.bm25_report, path("report.txt"));
    write_pr_csv(result.report.pr_points, path("pr_curve.csv"));
    write_length_buckets_csv(result.report.length_buckets, path("length_buckets.csv"));
    return result;
}

std::vector<AblationRow> run_ablation(const PipelineConfig& base) {
    const std::vector<std::pair<std::string, std::vector<Aspect>>> configs = {
        {"H", {Aspect::Headers}},
        {"Cel", {Aspect::Cells}},
        {"Cap", {Aspect::Caption}},
        {"H+Cel", {Aspect::Headers, Aspect::Cells}},
        {"H+Cel+Cap", {Aspect::Headers, Aspect::Cells, Aspect::Caption}},
    };
    std::vector<AblationRow> rows;
    for (const auto& [label, aspects] : configs) {
        PipelineConfig config = base;
        config.feature_aspects = aspects;
        std::string dir_label = label;
        std::replace(dir_label.begin(), dir_label.end(), '+', '_');
        config.out_dir = (std::filesystem::path(base.out_dir) / ("ablation_" + dir_label)).string();
        AblationRow row;
        row.label = label;
        row.aspects = aspects;
        row.result = run_pipeline(config);
        rows.push_back(std::move(row));
    }
    write_ablation_csv(rows, (std::filesystem::path(base.out_dir) / "ablation.csv").string());
    return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write ablation report: " + path);
    out.precision(17);
    out << "aspects,setting,map,p_at_1,evaluated,filtered,bm25_map,bm25_p_at_1\n";
    for (const auto& row : rows) {
        out << row.label << "," << row.result.setting_label << ",";
        if (row.result.report.metrics_defined) {
            out << row.result.report.map << "," << row.result.report.p_at_1;
        } else {
            out << "undefined,undefined";
        }
        out << "," << row.result.report.num_evaluated << "," << row.result.report.num_filtered << ",";
        if (row.result.bm25_report.metrics_defined) {
            out << row.result.bm25_report.map << "," << row.result.bm25_report.p_at_1;
        } else {
            out << "undefined,undefined";
        }
        out << "\n";
    }
}

}  // namespace tabret
