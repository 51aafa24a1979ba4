#include "tabret.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

tabret_status status_of(tabret::ErrorKind kind) {
    switch (kind) {
        case tabret::ErrorKind::Io: return TABRET_ERR_IO;
        case tabret::ErrorKind::Parse: return TABRET_ERR_PARSE;
        case tabret::ErrorKind::InvalidArgument: return TABRET_ERR_INVALID_ARGUMENT;
        case tabret::ErrorKind::NotFound: return TABRET_ERR_NOT_FOUND;
        case tabret::ErrorKind::State: return TABRET_ERR_STATE;
    }
    return TABRET_ERR_INTERNAL;
}

// Runs a body, translating exceptions into status codes + the thread-local
// message.
template <typename F>
tabret_status guarded(F&& body) {
    try {
        body();
        g_last_error.clear();
        return TABRET_OK;
    } catch (const tabret::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TABRET_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return TABRET_ERR_INTERNAL;
    }
}

tabret_status invalid(const char* message) {
    g_last_error = message;
    return TABRET_ERR_INVALID_ARGUMENT;
}

std::vector<tabret::Aspect> aspects_or(const char* csv, const char* fallback) {
    return tabret::parse_aspect_list(csv && *csv ? csv : fallback);
}

}  // namespace

struct tabret_corpus {
    tabret::CorpusLoadResult loaded;
};
struct tabret_queries {
    std::vector<tabret::Query> queries;
};
struct tabret_index {
    tabret::Bm25Index index;
};
struct tabret_hits {
    std::vector<tabret::ScoredTable> hits;
};
struct tabret_phrase_table {
    tabret::PhraseTable table;
};
struct tabret_embeddings {
    tabret::EmbeddingTable table;
};
struct tabret_cdssm {
    tabret::CdssmParams params;
};
struct tabret_models {
    tabret::NeuralModels models;
};
struct tabret_features {
    tabret::FeatureSet features;
};
struct tabret_forest {
    tabret::Forest forest;
};
struct tabret_report {
    tabret::EvalReport report;
    std::string label;
    std::vector<tabret::RankedResult> ranked;
    bool has_baseline = false;
    tabret::EvalReport baseline;
    bool has_recall = false;
    double recall = 0.0;
};

extern "C" {

const char* tabret_version(void) { return "1.0.0"; }

const char* tabret_status_name(tabret_status status) {
    switch (status) {
        case TABRET_OK: return "ok";
        case TABRET_ERR_IO: return "io error";
        case TABRET_ERR_PARSE: return "parse error";
        case TABRET_ERR_INVALID_ARGUMENT: return "invalid argument";
        case TABRET_ERR_NOT_FOUND: return "not found";
        case TABRET_ERR_STATE: return "invalid state";
        case TABRET_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* tabret_last_error(void) { return g_last_error.c_str(); }

/* ---- corpus ----------------------------------------------------------- */

tabret_status tabret_corpus_open(const char* path, tabret_corpus** out) {
    if (!path || !out) return invalid("corpus_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_corpus>();
        handle->loaded = tabret::load_corpus(path);
        *out = handle.release();
    });
}

void tabret_corpus_free(tabret_corpus* corpus) { delete corpus; }

size_t tabret_corpus_size(const tabret_corpus* corpus) {
    return corpus ? corpus->loaded.corpus.size() : 0;
}

size_t tabret_corpus_rejected(const tabret_corpus* corpus) {
    return corpus ? corpus->loaded.rejected.size() : 0;
}

const char* tabret_corpus_rejected_id(const tabret_corpus* corpus, size_t i) {
    if (!corpus || i >= corpus->loaded.rejected.size()) return nullptr;
    return corpus->loaded.rejected[i].table_id.c_str();
}

const char* tabret_corpus_rejected_reason(const tabret_corpus* corpus, size_t i) {
    if (!corpus || i >= corpus->loaded.rejected.size()) return nullptr;
    const auto& report = corpus->loaded.rejected[i];
    return report.violations.empty() ? "" : report.violations.front().c_str();
}

tabret_status tabret_corpus_save(const tabret_corpus* corpus, const char* path) {
    if (!corpus || !path) return invalid("corpus_save: null argument");
    return guarded([&] {
        std::ofstream out(path);
        if (!out) tabret::fail(tabret::ErrorKind::Io, std::string("cannot write corpus file: ") + path);
        for (const auto& table : corpus->loaded.corpus.tables) {
            out << tabret::table_to_record(table) << "\n";
        }
    });
}

/* ---- queries ---------------------------------------------------------- */

tabret_status tabret_queries_open(const char* path, tabret_queries** out) {
    if (!path || !out) return invalid("queries_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_queries>();
        handle->queries = tabret::load_queries(path);
        *out = handle.release();
    });
}

void tabret_queries_free(tabret_queries* queries) { delete queries; }

size_t tabret_queries_size(const tabret_queries* queries) {
    return queries ? queries->queries.size() : 0;
}

const char* tabret_queries_id(const tabret_queries* queries, size_t i) {
    if (!queries || i >= queries->queries.size()) return nullptr;
    return queries->queries[i].id.c_str();
}

const char* tabret_queries_text(const tabret_queries* queries, size_t i) {
    if (!queries || i >= queries->queries.size()) return nullptr;
    return queries->queries[i].text.c_str();
}

tabret_status tabret_queries_save(const tabret_queries* queries, const char* path) {
    if (!queries || !path) return invalid("queries_save: null argument");
    return guarded([&] { tabret::save_queries(queries->queries, path); });
}

tabret_status tabret_queries_split(const tabret_queries* queries, double train_ratio, double val_ratio,
                                   double test_ratio, uint64_t seed, tabret_queries** train_out,
                                   tabret_queries** val_out, tabret_queries** test_out) {
    if (!queries || !train_out || !val_out || !test_out) return invalid("queries_split: null argument");
    return guarded([&] {
        tabret::DatasetSplit split =
            tabret::split_dataset(queries->queries, train_ratio, val_ratio, test_ratio, seed);
        auto train = std::make_unique<tabret_queries>();
        auto val = std::make_unique<tabret_queries>();
        auto test = std::make_unique<tabret_queries>();
        train->queries = std::move(split.train);
        val->queries = std::move(split.validation);
        test->queries = std::move(split.test);
        *train_out = train.release();
        *val_out = val.release();
        *test_out = test.release();
    });
}

/* ---- index ------------------------------------------------------------ */

tabret_status tabret_index_build(const tabret_corpus* corpus, const char* aspects_csv, double k1,
                                 double b, tabret_index** out) {
    if (!corpus || !out) return invalid("index_build: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_index>();
        handle->index = tabret::Bm25Index::build(corpus->loaded.corpus,
                                                 aspects_or(aspects_csv, "caption,headers"), k1, b);
        *out = handle.release();
    });
}

tabret_status tabret_index_open(const char* path, tabret_index** out) {
    if (!path || !out) return invalid("index_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_index>();
        handle->index = tabret::Bm25Index::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_index_save(const tabret_index* index, const char* path) {
    if (!index || !path) return invalid("index_save: null argument");
    return guarded([&] { index->index.save(path); });
}

tabret_status tabret_index_save_stats(const tabret_index* index, const char* path) {
    if (!index || !path) return invalid("index_save_stats: null argument");
    return guarded([&] { tabret::save_stats(index->index.stats(), path); });
}

void tabret_index_free(tabret_index* index) { delete index; }

tabret_status tabret_index_retrieve(const tabret_index* index, const char* query_text, size_t topk,
                                    tabret_hits** out) {
    if (!index || !query_text || !out) return invalid("index_retrieve: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_hits>();
        handle->hits = index->index.retrieve_topk(tabret::tokenize(query_text), topk);
        *out = handle.release();
    });
}

tabret_status tabret_index_score(const tabret_index* index, const char* query_text,
                                 const char* table_id, double* score_out) {
    if (!index || !query_text || !table_id || !score_out) return invalid("index_score: null argument");
    return guarded([&] { *score_out = index->index.score(tabret::tokenize(query_text), table_id); });
}

tabret_status tabret_candidate_recall(const tabret_index* index, const tabret_queries* queries,
                                      size_t topk, double* recall_out) {
    if (!index || !queries || !recall_out) return invalid("candidate_recall: null argument");
    return guarded([&] { *recall_out = tabret::candidate_recall(index->index, queries->queries, topk); });
}

size_t tabret_hits_count(const tabret_hits* hits) { return hits ? hits->hits.size() : 0; }

const char* tabret_hits_table_id(const tabret_hits* hits, size_t i) {
    if (!hits || i >= hits->hits.size()) return nullptr;
    return hits->hits[i].table_id.c_str();
}

double tabret_hits_score(const tabret_hits* hits, size_t i) {
    if (!hits || i >= hits->hits.size()) return 0.0;
    return hits->hits[i].score;
}

void tabret_hits_free(tabret_hits* hits) { delete hits; }

/* ---- resources --------------------------------------------------------- */

tabret_status tabret_phrase_table_open(const char* path, tabret_phrase_table** out) {
    if (!path || !out) return invalid("phrase_table_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_phrase_table>();
        handle->table = tabret::PhraseTable::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_phrase_table_add_identities(tabret_phrase_table* pt) {
    if (!pt) return invalid("phrase_table_add_identities: null argument");
    return guarded([&] { pt->table.add_identities(); });
}

void tabret_phrase_table_free(tabret_phrase_table* pt) { delete pt; }

tabret_status tabret_embeddings_open(const char* path, tabret_embeddings** out) {
    if (!path || !out) return invalid("embeddings_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_embeddings>();
        handle->table = tabret::EmbeddingTable::load(path);
        *out = handle.release();
    });
}

void tabret_embeddings_free(tabret_embeddings* emb) { delete emb; }

/* ---- cdssm -------------------------------------------------------------- */

tabret_cdssm_options tabret_cdssm_options_default(void) {
    tabret_cdssm_options o;
    tabret::CdssmConfig d;
    o.trigram_dims = d.trigram_dims;
    o.subword_dim = d.subword_dim;
    o.conv_dim = d.conv_dim;
    o.output_dim = d.output_dim;
    o.epochs = d.epochs;
    o.learning_rate = d.learning_rate;
    o.negatives_per_positive = d.negatives_per_positive;
    o.batch_size = d.batch_size;
    o.softmax_scale = d.softmax_scale;
    o.seed = d.seed;
    return o;
}

static tabret::CdssmConfig to_config(const tabret_cdssm_options& o) {
    tabret::CdssmConfig c;
    c.trigram_dims = o.trigram_dims;
    c.subword_dim = o.subword_dim;
    c.conv_dim = o.conv_dim;
    c.output_dim = o.output_dim;
    c.epochs = o.epochs;
    c.learning_rate = o.learning_rate;
    c.negatives_per_positive = o.negatives_per_positive;
    c.batch_size = o.batch_size;
    c.softmax_scale = o.softmax_scale;
    c.seed = o.seed;
    return c;
}

tabret_status tabret_cdssm_train(const char* pairs_path, const tabret_cdssm_options* options,
                                 const char* loss_trace_path, tabret_cdssm** out) {
    if (!pairs_path || !out) return invalid("cdssm_train: null argument");
    return guarded([&] {
        tabret::CdssmConfig config =
            options ? to_config(*options) : to_config(tabret_cdssm_options_default());
        auto pairs = tabret::load_paraphrase_pairs(pairs_path);
        tabret::CdssmTrainResult trained = tabret::train_subword_encoder(pairs, config);
        if (loss_trace_path) {
            std::ofstream trace(loss_trace_path);
            trace.precision(17);
            for (double l : trained.epoch_loss) trace << l << "\n";
        }
        auto handle = std::make_unique<tabret_cdssm>();
        handle->params = std::move(trained.params);
        *out = handle.release();
    });
}

tabret_status tabret_cdssm_open(const char* path, tabret_cdssm** out) {
    if (!path || !out) return invalid("cdssm_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_cdssm>();
        handle->params = tabret::CdssmParams::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_cdssm_save(const tabret_cdssm* cdssm, const char* path) {
    if (!cdssm || !path) return invalid("cdssm_save: null argument");
    return guarded([&] { cdssm->params.save(path); });
}

void tabret_cdssm_free(tabret_cdssm* cdssm) { delete cdssm; }

/* ---- neural models ------------------------------------------------------- */

tabret_nn_options tabret_nn_options_default(void) {
    tabret_nn_options o;
    tabret::NnTrainConfig d;
    o.embed_dim = d.embed_dim;
    o.hidden_dim = d.hidden_dim;
    o.learning_rate = d.learning_rate;
    o.epochs = d.epochs;
    o.batch_size = d.batch_size;
    o.negatives_per_positive = 4;
    o.seed = d.seed;
    return o;
}

tabret_status tabret_models_train(const tabret_corpus* corpus, const tabret_queries* train_queries,
                                  const tabret_index* index, const char* aspects_csv,
                                  const tabret_nn_options* options, const char* loss_trace_path,
                                  tabret_models** out) {
    if (!corpus || !train_queries || !index || !out) return invalid("models_train: null argument");
    return guarded([&] {
        tabret_nn_options opt = options ? *options : tabret_nn_options_default();
        tabret::NnTrainConfig config;
        config.embed_dim = opt.embed_dim;
        config.hidden_dim = opt.hidden_dim;
        config.learning_rate = opt.learning_rate;
        config.epochs = opt.epochs;
        config.batch_size = opt.batch_size;
        config.seed = opt.seed;

        std::vector<tabret::Aspect> aspects = aspects_or(aspects_csv, "headers,cells,caption");
        std::vector<tabret::NnExample> examples =
            tabret::build_nn_examples(corpus->loaded.corpus, train_queries->queries, index->index, 50,
                                      opt.negatives_per_positive, opt.seed);
        std::ofstream trace;
        if (loss_trace_path) {
            trace.open(loss_trace_path);
            trace.precision(17);
        }
        auto handle = std::make_unique<tabret_models>();
        for (tabret::NeuralAspect aspect : tabret::kNeuralAspects) {
            bool enabled = std::find(aspects.begin(), aspects.end(), tabret::source_aspect(aspect)) !=
                           aspects.end();
            if (!enabled) continue;
            tabret::NnTrainResult trained = tabret::train_aspect_model(examples, aspect, config);
            if (trace.is_open()) {
                trace << tabret::neural_aspect_name(aspect);
                for (double l : trained.epoch_loss) trace << " " << l;
                trace << "\n";
            }
            handle->models.models[aspect] = std::move(trained.model);
        }
        *out = handle.release();
    });
}

tabret_status tabret_models_open(const char* path, tabret_models** out) {
    if (!path || !out) return invalid("models_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_models>();
        handle->models = tabret::NeuralModels::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_models_save(const tabret_models* models, const char* path) {
    if (!models || !path) return invalid("models_save: null argument");
    return guarded([&] { models->models.save(path); });
}

void tabret_models_free(tabret_models* models) { delete models; }

/* ---- featurize ----------------------------------------------------------- */

tabret_featurize_options tabret_featurize_options_default(void) {
    tabret_featurize_options o;
    o.aspects_csv = "headers,cells,caption";
    o.designed = 1;
    o.neural = 1;
    o.topk = 50;
    return o;
}

tabret_status tabret_featurize(const tabret_corpus* corpus, const tabret_queries* queries,
                               const tabret_index* index, const tabret_phrase_table* phrase_table,
                               const tabret_embeddings* embeddings, const tabret_cdssm* cdssm,
                               const tabret_models* models, const tabret_featurize_options* options,
                               tabret_features** out) {
    if (!corpus || !queries || !index || !out) return invalid("featurize: null argument");
    tabret_featurize_options opt = options ? *options : tabret_featurize_options_default();
    if (opt.designed && (!phrase_table || !embeddings || !cdssm)) {
        return invalid("featurize: designed features need phrase table, embeddings and cdssm handles");
    }
    if (opt.neural && !models) return invalid("featurize: neural features need a models handle");
    return guarded([&] {
        tabret::FeatureConfig config;
        config.aspects = aspects_or(opt.aspects_csv, "headers,cells,caption");
        config.designed = opt.designed != 0;
        config.neural = opt.neural != 0;
        config.topk = opt.topk;

        tabret::CorpusStats feature_stats;
        tabret::FeatureResources resources;
        if (config.designed) {
            feature_stats = tabret::build_stats(
                corpus->loaded.corpus, {tabret::Aspect::Headers, tabret::Aspect::Cells, tabret::Aspect::Caption});
            resources.stats = &feature_stats;
            resources.phrase_table = &phrase_table->table;
            resources.embeddings = &embeddings->table;
            resources.encoder = &cdssm->params;
        }
        auto handle = std::make_unique<tabret_features>();
        handle->features =
            tabret::featurize(corpus->loaded.corpus, queries->queries, index->index, resources,
                              models ? &models->models : nullptr, config);
        *out = handle.release();
    });
}

tabret_status tabret_features_open(const char* path, tabret_features** out) {
    if (!path || !out) return invalid("features_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_features>();
        handle->features = tabret::FeatureSet::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_features_save(const tabret_features* features, const char* path) {
    if (!features || !path) return invalid("features_save: null argument");
    return guarded([&] { features->features.save(path); });
}

void tabret_features_free(tabret_features* features) { delete features; }

/* ---- ranker ---------------------------------------------------------------- */

tabret_ranker_options tabret_ranker_options_default(void) {
    tabret_ranker_options o;
    tabret::LambdaMartConfig d;
    o.num_trees = d.num_trees;
    o.max_leaves = d.max_leaves;
    o.learning_rate = d.learning_rate;
    o.min_instances_per_leaf = d.min_instances_per_leaf;
    o.seed = d.seed;
    return o;
}

tabret_status tabret_ranker_train(const tabret_features* train_features,
                                  const tabret_ranker_options* options, const char* map_trace_path,
                                  tabret_forest** out) {
    if (!train_features || !out) return invalid("ranker_train: null argument");
    return guarded([&] {
        tabret_ranker_options opt = options ? *options : tabret_ranker_options_default();
        tabret::LambdaMartConfig config;
        config.num_trees = opt.num_trees;
        config.max_leaves = opt.max_leaves;
        config.learning_rate = opt.learning_rate;
        config.min_instances_per_leaf = opt.min_instances_per_leaf;
        config.seed = opt.seed;

        std::vector<tabret::QueryGroup> groups = tabret::to_query_groups(train_features->features);
        tabret::LambdaMartResult trained =
            tabret::fit_lambdamart(groups, train_features->features.schema, config);
        if (map_trace_path) {
            std::ofstream trace(map_trace_path);
            trace.precision(17);
            for (double m : trained.train_map_trace) trace << m << "\n";
        }
        auto handle = std::make_unique<tabret_forest>();
        handle->forest = std::move(trained.forest);
        *out = handle.release();
    });
}

tabret_status tabret_forest_open(const char* path, tabret_forest** out) {
    if (!path || !out) return invalid("forest_open: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_forest>();
        handle->forest = tabret::Forest::load(path);
        *out = handle.release();
    });
}

tabret_status tabret_forest_save(const tabret_forest* forest, const char* path) {
    if (!forest || !path) return invalid("forest_save: null argument");
    return guarded([&] { forest->forest.save(path); });
}

void tabret_forest_free(tabret_forest* forest) { delete forest; }

/* ---- evaluation --------------------------------------------------------------- */

tabret_status tabret_evaluate(const tabret_features* features, const tabret_forest* forest,
                              int filter, tabret_report** out) {
    if (!features || !out) return invalid("evaluate: null argument");
    return guarded([&] {
        auto handle = std::make_unique<tabret_report>();
        if (forest) {
            handle->ranked = tabret::rank_with_forest(features->features, forest->forest);
            handle->label = "ranked";
        } else {
            handle->ranked = tabret::rank_by_feature(features->features, "bm25");
            handle->label = "BM25";
        }
        handle->report = tabret::evaluate(handle->ranked, filter != 0);
        handle->report.pr_points = tabret::pr_curve(handle->ranked, tabret::default_threshold_grid(handle->ranked));
        handle->report.length_buckets = tabret::length_bucket_report(handle->ranked);
        if (forest) {
            std::vector<tabret::RankedResult> bm25_ranked =
                tabret::rank_by_feature(features->features, "bm25");
            handle->baseline = tabret::evaluate(bm25_ranked, filter != 0);
            handle->has_baseline = true;
        }
        *out = handle.release();
    });
}

int tabret_report_metrics_defined(const tabret_report* report) {
    return report && report->report.metrics_defined ? 1 : 0;
}

double tabret_report_map(const tabret_report* report) { return report ? report->report.map : 0.0; }

double tabret_report_p_at_1(const tabret_report* report) { return report ? report->report.p_at_1 : 0.0; }

size_t tabret_report_evaluated(const tabret_report* report) {
    return report ? report->report.num_evaluated : 0;
}

size_t tabret_report_filtered(const tabret_report* report) {
    return report ? report->report.num_filtered : 0;
}

int tabret_report_has_baseline(const tabret_report* report) {
    return report && report->has_baseline ? 1 : 0;
}

double tabret_report_baseline_map(const tabret_report* report) {
    return report && report->has_baseline ? report->baseline.map : 0.0;
}

double tabret_report_baseline_p_at_1(const tabret_report* report) {
    return report && report->has_baseline ? report->baseline.p_at_1 : 0.0;
}

int tabret_report_has_recall(const tabret_report* report) {
    return report && report->has_recall ? 1 : 0;
}

double tabret_report_recall(const tabret_report* report) {
    return report && report->has_recall ? report->recall : 0.0;
}

tabret_status tabret_report_write(const tabret_report* report, const char* out_dir) {
    if (!report || !out_dir) return invalid("report_write: null argument");
    return guarded([&] {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
        tabret::write_report_json(report->report, report->label,
                                  report->has_baseline ? &report->baseline : nullptr, at("report.json"));
        tabret::write_report_text(report->report, report->label,
                                  report->has_baseline ? &report->baseline : nullptr, at("report.txt"));
        tabret::write_pr_csv(report->report.pr_points, at("pr_curve.csv"));
        tabret::write_length_buckets_csv(report->report.length_buckets, at("length_buckets.csv"));
        tabret::write_ranked_results(report->ranked, at("ranked.jsonl"));
    });
}

void tabret_report_free(tabret_report* report) { delete report; }

tabret_status tabret_pr_curve_file(const char* ranked_results_path, const double* thresholds,
                                   size_t num_thresholds, const char* out_csv_path) {
    if (!ranked_results_path || !out_csv_path) return invalid("pr_curve_file: null argument");
    return guarded([&] {
        std::vector<tabret::RankedResult> ranked = tabret::load_ranked_results(ranked_results_path);
        std::vector<double> grid;
        if (thresholds && num_thresholds > 0) {
            grid.assign(thresholds, thresholds + num_thresholds);
        } else {
            grid = tabret::default_threshold_grid(ranked);
        }
        tabret::write_pr_csv(tabret::pr_curve(ranked, grid), out_csv_path);
    });
}

/* ---- pipeline ----------------------------------------------------------------- */

tabret_pipeline_options tabret_pipeline_options_default(void) {
    tabret_pipeline_options o;
    o.corpus_path = nullptr;
    o.queries_path = nullptr;
    o.phrase_table_path = nullptr;
    o.embeddings_path = nullptr;
    o.paraphrases_path = nullptr;
    o.out_dir = nullptr;
    o.index_aspects_csv = "caption,headers";
    o.feature_aspects_csv = "headers,cells,caption";
    o.k1 = 1.2;
    o.b = 0.75;
    o.topk = 50;
    o.phrase_table_identities = 0;
    o.designed = 1;
    o.neural = 1;
    o.cdssm = tabret_cdssm_options_default();
    o.nn = tabret_nn_options_default();
    o.ranker = tabret_ranker_options_default();
    o.train_ratio = 0.7;
    o.val_ratio = 0.1;
    o.test_ratio = 0.2;
    o.filter_eval = 1;
    o.seed = 13;
    o.ablation = 0;
    return o;
}

tabret_status tabret_pipeline_run(const tabret_pipeline_options* options, tabret_report** out) {
    if (!options || !out) return invalid("pipeline_run: null argument");
    if (!options->corpus_path || !options->queries_path || !options->out_dir) {
        return invalid("pipeline_run: corpus_path, queries_path and out_dir are required");
    }
    return guarded([&] {
        tabret::PipelineConfig config;
        config.corpus_path = options->corpus_path;
        config.queries_path = options->queries_path;
        config.phrase_table_path = options->phrase_table_path ? options->phrase_table_path : "";
        config.embeddings_path = options->embeddings_path ? options->embeddings_path : "";
        config.paraphrases_path = options->paraphrases_path ? options->paraphrases_path : "";
        config.out_dir = options->out_dir;
        config.index_aspects = aspects_or(options->index_aspects_csv, "caption,headers");
        config.feature_aspects = aspects_or(options->feature_aspects_csv, "headers,cells,caption");
        config.k1 = options->k1;
        config.b = options->b;
        config.topk = options->topk;
        config.phrase_table_identities = options->phrase_table_identities != 0;
        config.designed = options->designed != 0;
        config.neural = options->neural != 0;
        config.cdssm = to_config(options->cdssm);
        config.nn.embed_dim = options->nn.embed_dim;
        config.nn.hidden_dim = options->nn.hidden_dim;
        config.nn.learning_rate = options->nn.learning_rate;
        config.nn.epochs = options->nn.epochs;
        config.nn.batch_size = options->nn.batch_size;
        config.nn.seed = options->nn.seed;
        config.nn_negatives_per_positive = options->nn.negatives_per_positive;
        config.ranker.num_trees = options->ranker.num_trees;
        config.ranker.max_leaves = options->ranker.max_leaves;
        config.ranker.learning_rate = options->ranker.learning_rate;
        config.ranker.min_instances_per_leaf = options->ranker.min_instances_per_leaf;
        config.ranker.seed = options->ranker.seed;
        config.train_ratio = options->train_ratio;
        config.val_ratio = options->val_ratio;
        config.test_ratio = options->test_ratio;
        config.filter_eval = options->filter_eval != 0;
        config.seed = options->seed;

        tabret::PipelineResult result;
        if (options->ablation) {
            std::vector<tabret::AblationRow> rows = tabret::run_ablation(config);
            result = std::move(rows.back().result);
        } else {
            result = tabret::run_pipeline(config);
        }
        auto handle = std::make_unique<tabret_report>();
        handle->report = std::move(result.report);
        handle->label = result.setting_label;
        handle->has_baseline = true;
        handle->baseline = std::move(result.bm25_report);
        handle->has_recall = true;
        handle->recall = result.candidate_recall;
        *out = handle.release();
    });
}

} /* extern "C" */
