// Command-line front end over the tabret C API. Every subcommand reads and
// writes files, so stages can be rerun and inspected in isolation.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tabret.h"

namespace {

[[noreturn]] void die(const std::string& where, tabret_status status) {
    std::fprintf(stderr, "error [%s]: %s (%s)\n", where.c_str(), tabret_last_error(),
                 tabret_status_name(status));
    std::exit(1);
}

void check(tabret_status status, const std::string& where) {
    if (status != TABRET_OK) die(where, status);
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    ~Handle() {
        if (ptr) Free(ptr);
    }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using CorpusHandle = Handle<tabret_corpus, tabret_corpus_free>;
using QueriesHandle = Handle<tabret_queries, tabret_queries_free>;
using IndexHandle = Handle<tabret_index, tabret_index_free>;
using HitsHandle = Handle<tabret_hits, tabret_hits_free>;
using PhraseTableHandle = Handle<tabret_phrase_table, tabret_phrase_table_free>;
using EmbeddingsHandle = Handle<tabret_embeddings, tabret_embeddings_free>;
using CdssmHandle = Handle<tabret_cdssm, tabret_cdssm_free>;
using ModelsHandle = Handle<tabret_models, tabret_models_free>;
using FeaturesHandle = Handle<tabret_features, tabret_features_free>;
using ForestHandle = Handle<tabret_forest, tabret_forest_free>;
using ReportHandle = Handle<tabret_report, tabret_report_free>;

bool feature_family_enabled(const std::string& families, const char* name) {
    return families.find(name) != std::string::npos;
}

void print_report(const tabret_report* report) {
    if (tabret_report_metrics_defined(report)) {
        std::printf("MAP        %.4f\n", tabret_report_map(report));
        std::printf("P@1        %.4f\n", tabret_report_p_at_1(report));
    } else {
        std::printf("MAP        undefined (all queries filtered)\n");
    }
    std::printf("evaluated  %zu\n", tabret_report_evaluated(report));
    std::printf("filtered   %zu\n", tabret_report_filtered(report));
    if (tabret_report_has_baseline(report)) {
        std::printf("BM25 MAP   %.4f\n", tabret_report_baseline_map(report));
        std::printf("BM25 P@1   %.4f\n", tabret_report_baseline_p_at_1(report));
    }
    if (tabret_report_has_recall(report)) {
        std::printf("candidate recall  %.4f\n", tabret_report_recall(report));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabret: content-based table retrieval (candidate retrieval + feature/neural ranking)"};
    app.require_subcommand(1);

    // ---- ingest ----
    std::string corpus_path, queries_path, out_path, out_dir;
    auto* ingest = app.add_subcommand("ingest", "validate a corpus file and write the canonical form");
    ingest->add_option("--corpus", corpus_path, "corpus jsonl")->required();
    ingest->add_option("--out", out_path, "canonical corpus output")->required();
    std::string ingest_queries;
    ingest->add_option("--queries", ingest_queries, "optional query file to validate");

    // ---- build-index ----
    std::string aspects = "caption,headers";
    double k1 = 1.2, b = 0.75;
    std::string stats_out;
    auto* build_index = app.add_subcommand("build-index", "build the BM25 candidate index");
    build_index->add_option("--corpus", corpus_path, "corpus jsonl")->required();
    build_index->add_option("--out", out_path, "index output file")->required();
    build_index->add_option("--aspects", aspects, "indexed aspects (default caption,headers)");
    build_index->add_option("--k1", k1, "BM25 k1 (default 1.2)");
    build_index->add_option("--b", b, "BM25 b (default 0.75)");
    build_index->add_option("--stats-out", stats_out, "also write the corpus statistics file");

    // ---- retrieve ----
    std::string index_path;
    size_t topk = 50;
    auto* retrieve = app.add_subcommand("retrieve", "run candidate retrieval for a query file");
    retrieve->add_option("--index", index_path, "index file")->required();
    retrieve->add_option("--queries", queries_path, "query jsonl")->required();
    retrieve->add_option("--out", out_path, "candidates tsv output")->required();
    retrieve->add_option("--topk", topk, "candidates per query (default 50)");

    // ---- train-cdssm ----
    std::string pairs_path, loss_out;
    tabret_cdssm_options cdssm_opt = tabret_cdssm_options_default();
    auto* train_cdssm = app.add_subcommand("train-cdssm", "train the sub-word sentence encoder");
    train_cdssm->add_option("--pairs", pairs_path, "paraphrase pairs tsv")->required();
    train_cdssm->add_option("--out", out_path, "encoder params output")->required();
    train_cdssm->add_option("--loss-out", loss_out, "write per-epoch loss trace");
    train_cdssm->add_option("--epochs", cdssm_opt.epochs, "training epochs");
    train_cdssm->add_option("--lr", cdssm_opt.learning_rate, "learning rate");
    train_cdssm->add_option("--negatives", cdssm_opt.negatives_per_positive, "negatives per positive");
    train_cdssm->add_option("--batch", cdssm_opt.batch_size, "batch size");
    train_cdssm->add_option("--seed", cdssm_opt.seed, "rng seed");

    // ---- train-nn ----
    tabret_nn_options nn_opt = tabret_nn_options_default();
    std::string nn_aspects = "headers,cells,caption";
    auto* train_nn = app.add_subcommand("train-nn", "train the neural aspect matchers");
    train_nn->add_option("--corpus", corpus_path, "corpus jsonl")->required();
    train_nn->add_option("--queries", queries_path, "labeled training queries")->required();
    train_nn->add_option("--index", index_path, "index file (negative sampling)")->required();
    train_nn->add_option("--out", out_path, "models output")->required();
    train_nn->add_option("--aspects", nn_aspects, "table aspects to train models for");
    train_nn->add_option("--loss-out", loss_out, "write per-aspect loss traces");
    train_nn->add_option("--epochs", nn_opt.epochs, "training epochs");
    train_nn->add_option("--lr", nn_opt.learning_rate, "learning rate");
    train_nn->add_option("--embed-dim", nn_opt.embed_dim, "embedding size");
    train_nn->add_option("--hidden-dim", nn_opt.hidden_dim, "GRU hidden size");
    train_nn->add_option("--negatives", nn_opt.negatives_per_positive, "negatives per positive");
    train_nn->add_option("--seed", nn_opt.seed, "rng seed");

    // ---- featurize ----
    std::string phrase_table_path, embeddings_path, cdssm_path, models_path;
    std::string families = "designed,neural";
    std::string featurize_aspects = "headers,cells,caption";
    auto* featurize = app.add_subcommand("featurize", "compute feature vectors for query candidates");
    featurize->add_option("--corpus", corpus_path, "corpus jsonl")->required();
    featurize->add_option("--queries", queries_path, "query jsonl")->required();
    featurize->add_option("--index", index_path, "index file")->required();
    featurize->add_option("--out", out_path, "feature file output")->required();
    featurize->add_option("--aspects", featurize_aspects, "feature aspects (default headers,cells,caption)");
    featurize->add_option("--features", families, "feature families: designed,neural");
    featurize->add_option("--phrase-table", phrase_table_path, "phrase table (designed)");
    featurize->add_option("--embeddings", embeddings_path, "word embeddings (designed)");
    featurize->add_option("--cdssm", cdssm_path, "trained encoder params (designed)");
    featurize->add_option("--models", models_path, "trained neural models (neural)");
    featurize->add_option("--topk", topk, "candidates per query");
    bool pt_identities = false;
    featurize->add_flag("--phrase-table-identities", pt_identities,
                        "add src->src entries with probability 1 to the phrase table");

    // ---- train-ranker ----
    tabret_ranker_options ranker_opt = tabret_ranker_options_default();
    std::string features_path, map_out;
    auto* train_ranker = app.add_subcommand("train-ranker", "fit the LambdaMART fusion ranker");
    train_ranker->add_option("--features", features_path, "training feature file")->required();
    train_ranker->add_option("--out", out_path, "forest output")->required();
    train_ranker->add_option("--map-out", map_out, "write per-round training MAP");
    train_ranker->add_option("--trees", ranker_opt.num_trees, "number of trees (default 100)");
    train_ranker->add_option("--leaves", ranker_opt.max_leaves, "max leaves per tree (default 16)");
    train_ranker->add_option("--lr", ranker_opt.learning_rate, "learning rate (default 0.1)");
    train_ranker->add_option("--min-leaf", ranker_opt.min_instances_per_leaf, "min instances per leaf");
    train_ranker->add_option("--seed", ranker_opt.seed, "rng seed");

    // ---- evaluate ----
    std::string forest_path;
    bool no_filter = false;
    auto* evaluate = app.add_subcommand("evaluate", "rank candidates and report MAP / P@1");
    evaluate->add_option("--features", features_path, "feature file with labels")->required();
    evaluate->add_option("--forest", forest_path, "trained forest (omit to rank by raw BM25)");
    evaluate->add_option("--out-dir", out_dir, "report directory")->required();
    evaluate->add_flag("--no-filter", no_filter, "disable the evaluation filter");

    // ---- pr-curve ----
    std::string ranked_path, thresholds_csv;
    auto* pr_curve = app.add_subcommand("pr-curve", "precision/recall over score thresholds");
    pr_curve->add_option("--ranked", ranked_path, "ranked results jsonl")->required();
    pr_curve->add_option("--out", out_path, "csv output")->required();
    pr_curve->add_option("--thresholds", thresholds_csv, "comma-separated ascending thresholds");

    // ---- pipeline ----
    tabret_pipeline_options pipe = tabret_pipeline_options_default();
    std::string paraphrases_path, index_aspects = "caption,headers", feature_aspects = "headers,cells,caption";
    bool ablation = false, pipe_no_filter = false;
    auto* pipeline = app.add_subcommand("pipeline", "run the full retrieve/train/rank/evaluate pipeline");
    pipeline->add_option("--corpus", corpus_path, "corpus jsonl")->required();
    pipeline->add_option("--queries", queries_path, "labeled query jsonl")->required();
    pipeline->add_option("--out-dir", out_dir, "artifact directory")->required();
    pipeline->add_option("--phrase-table", phrase_table_path, "phrase table (designed features)");
    pipeline->add_option("--embeddings", embeddings_path, "word embeddings (designed features)");
    pipeline->add_option("--paraphrases", paraphrases_path, "encoder training pairs (designed features)");
    pipeline->add_option("--features", families, "feature families: designed,neural");
    pipeline->add_option("--aspects", feature_aspects, "feature aspects (ablation axis)");
    pipeline->add_option("--index-aspects", index_aspects, "candidate index aspects");
    pipeline->add_option("--topk", pipe.topk, "candidates per query");
    pipeline->add_option("--k1", pipe.k1, "BM25 k1");
    pipeline->add_option("--b", pipe.b, "BM25 b");
    pipeline->add_option("--seed", pipe.seed, "master seed for every stage");
    pipeline->add_option("--nn-epochs", pipe.nn.epochs, "neural training epochs");
    pipeline->add_option("--cdssm-epochs", pipe.cdssm.epochs, "encoder training epochs");
    pipeline->add_option("--trees", pipe.ranker.num_trees, "ranker trees");
    bool pipe_pt_identities = false;
    pipeline->add_flag("--phrase-table-identities", pipe_pt_identities,
                       "add src->src entries with probability 1 to the phrase table");
    pipeline->add_flag("--ablation", ablation, "run the aspect ablation grid (H/Cel/Cap/H+Cel/H+Cel+Cap)");
    pipeline->add_flag("--no-filter", pipe_no_filter, "disable the evaluation filter");

    CLI11_PARSE(app, argc, argv);

    if (*ingest) {
        CorpusHandle corpus;
        check(tabret_corpus_open(corpus_path.c_str(), corpus.out()), "ingest");
        check(tabret_corpus_save(corpus.get(), out_path.c_str()), "ingest");
        std::printf("tables   %zu\nrejected %zu\n", tabret_corpus_size(corpus.get()),
                    tabret_corpus_rejected(corpus.get()));
        for (size_t i = 0; i < tabret_corpus_rejected(corpus.get()); ++i) {
            std::fprintf(stderr, "rejected %s: %s\n", tabret_corpus_rejected_id(corpus.get(), i),
                         tabret_corpus_rejected_reason(corpus.get(), i));
        }
        if (!ingest_queries.empty()) {
            QueriesHandle queries;
            check(tabret_queries_open(ingest_queries.c_str(), queries.out()), "ingest");
            std::printf("queries  %zu\n", tabret_queries_size(queries.get()));
        }
        return 0;
    }

    if (*build_index) {
        CorpusHandle corpus;
        check(tabret_corpus_open(corpus_path.c_str(), corpus.out()), "build-index");
        IndexHandle index;
        check(tabret_index_build(corpus.get(), aspects.c_str(), k1, b, index.out()), "build-index");
        check(tabret_index_save(index.get(), out_path.c_str()), "build-index");
        if (!stats_out.empty()) check(tabret_index_save_stats(index.get(), stats_out.c_str()), "build-index");
        std::printf("indexed %zu tables (aspects %s)\n", tabret_corpus_size(corpus.get()), aspects.c_str());
        return 0;
    }

    if (*retrieve) {
        IndexHandle index;
        check(tabret_index_open(index_path.c_str(), index.out()), "retrieve");
        QueriesHandle queries;
        check(tabret_queries_open(queries_path.c_str(), queries.out()), "retrieve");
        FILE* out = std::fopen(out_path.c_str(), "w");
        if (!out) {
            std::fprintf(stderr, "error [retrieve]: cannot write %s\n", out_path.c_str());
            return 1;
        }
        size_t n = tabret_queries_size(queries.get());
        for (size_t q = 0; q < n; ++q) {
            const char* qid = tabret_queries_id(queries.get(), q);
            const char* text = tabret_queries_text(queries.get(), q);
            HitsHandle hits;
            check(tabret_index_retrieve(index.get(), text, topk, hits.out()), "retrieve");
            for (size_t i = 0; i < tabret_hits_count(hits.get()); ++i) {
                std::fprintf(out, "%s\t%zu\t%s\t%.17g\n", qid, i + 1,
                             tabret_hits_table_id(hits.get(), i), tabret_hits_score(hits.get(), i));
            }
        }
        std::fclose(out);
        std::printf("retrieved candidates for %zu queries\n", n);
        return 0;
    }

    if (*train_cdssm) {
        CdssmHandle cdssm;
        check(tabret_cdssm_train(pairs_path.c_str(), &cdssm_opt,
                                 loss_out.empty() ? nullptr : loss_out.c_str(), cdssm.out()),
              "train-cdssm");
        check(tabret_cdssm_save(cdssm.get(), out_path.c_str()), "train-cdssm");
        std::printf("encoder written to %s\n", out_path.c_str());
        return 0;
    }

    if (*train_nn) {
        CorpusHandle corpus;
        check(tabret_corpus_open(corpus_path.c_str(), corpus.out()), "train-nn");
        QueriesHandle queries;
        check(tabret_queries_open(queries_path.c_str(), queries.out()), "train-nn");
        IndexHandle index;
        check(tabret_index_open(index_path.c_str(), index.out()), "train-nn");
        ModelsHandle models;
        check(tabret_models_train(corpus.get(), queries.get(), index.get(), nn_aspects.c_str(), &nn_opt,
                                  loss_out.empty() ? nullptr : loss_out.c_str(), models.out()),
              "train-nn");
        check(tabret_models_save(models.get(), out_path.c_str()), "train-nn");
        std::printf("models written to %s\n", out_path.c_str());
        return 0;
    }

    if (*featurize) {
        bool designed = feature_family_enabled(families, "designed");
        bool neural = feature_family_enabled(families, "neural");
        CorpusHandle corpus;
        check(tabret_corpus_open(corpus_path.c_str(), corpus.out()), "featurize");
        QueriesHandle queries;
        check(tabret_queries_open(queries_path.c_str(), queries.out()), "featurize");
        IndexHandle index;
        check(tabret_index_open(index_path.c_str(), index.out()), "featurize");
        PhraseTableHandle pt;
        EmbeddingsHandle emb;
        CdssmHandle cdssm;
        ModelsHandle models;
        if (designed) {
            check(tabret_phrase_table_open(phrase_table_path.c_str(), pt.out()), "featurize");
            if (pt_identities) check(tabret_phrase_table_add_identities(pt.get()), "featurize");
            check(tabret_embeddings_open(embeddings_path.c_str(), emb.out()), "featurize");
            check(tabret_cdssm_open(cdssm_path.c_str(), cdssm.out()), "featurize");
        }
        if (neural) check(tabret_models_open(models_path.c_str(), models.out()), "featurize");
        tabret_featurize_options fopt = tabret_featurize_options_default();
        fopt.aspects_csv = featurize_aspects.c_str();
        fopt.designed = designed ? 1 : 0;
        fopt.neural = neural ? 1 : 0;
        fopt.topk = topk;
        FeaturesHandle features;
        check(tabret_featurize(corpus.get(), queries.get(), index.get(), pt.get(), emb.get(), cdssm.get(),
                               models.get(), &fopt, features.out()),
              "featurize");
        check(tabret_features_save(features.get(), out_path.c_str()), "featurize");
        std::printf("features written to %s\n", out_path.c_str());
        return 0;
    }

    if (*train_ranker) {
        FeaturesHandle features;
        check(tabret_features_open(features_path.c_str(), features.out()), "train-ranker");
        ForestHandle forest;
        check(tabret_ranker_train(features.get(), &ranker_opt, map_out.empty() ? nullptr : map_out.c_str(),
                                  forest.out()),
              "train-ranker");
        check(tabret_forest_save(forest.get(), out_path.c_str()), "train-ranker");
        std::printf("forest written to %s\n", out_path.c_str());
        return 0;
    }

    if (*evaluate) {
        FeaturesHandle features;
        check(tabret_features_open(features_path.c_str(), features.out()), "evaluate");
        ForestHandle forest;
        if (!forest_path.empty()) check(tabret_forest_open(forest_path.c_str(), forest.out()), "evaluate");
        ReportHandle report;
        check(tabret_evaluate(features.get(), forest.get(), no_filter ? 0 : 1, report.out()), "evaluate");
        check(tabret_report_write(report.get(), out_dir.c_str()), "evaluate");
        print_report(report.get());
        return 0;
    }

    if (*pr_curve) {
        std::vector<double> thresholds;
        if (!thresholds_csv.empty()) {
            std::stringstream ss(thresholds_csv);
            std::string item;
            while (std::getline(ss, item, ',')) thresholds.push_back(std::stod(item));
        }
        check(tabret_pr_curve_file(ranked_path.c_str(), thresholds.empty() ? nullptr : thresholds.data(),
                                   thresholds.size(), out_path.c_str()),
              "pr-curve");
        std::printf("pr curve written to %s\n", out_path.c_str());
        return 0;
    }

    if (*pipeline) {
        pipe.corpus_path = corpus_path.c_str();
        pipe.queries_path = queries_path.c_str();
        pipe.out_dir = out_dir.c_str();
        pipe.phrase_table_path = phrase_table_path.empty() ? nullptr : phrase_table_path.c_str();
        pipe.embeddings_path = embeddings_path.empty() ? nullptr : embeddings_path.c_str();
        pipe.paraphrases_path = paraphrases_path.empty() ? nullptr : paraphrases_path.c_str();
        pipe.index_aspects_csv = index_aspects.c_str();
        pipe.feature_aspects_csv = feature_aspects.c_str();
        pipe.designed = feature_family_enabled(families, "designed") ? 1 : 0;
        pipe.neural = feature_family_enabled(families, "neural") ? 1 : 0;
        pipe.phrase_table_identities = pipe_pt_identities ? 1 : 0;
        pipe.filter_eval = pipe_no_filter ? 0 : 1;
        pipe.ablation = ablation ? 1 : 0;
        ReportHandle report;
        check(tabret_pipeline_run(&pipe, report.out()), "pipeline");
        print_report(report.get());
        std::printf("artifacts in %s\n", out_dir.c_str());
        return 0;
    }

    return 0;
}
