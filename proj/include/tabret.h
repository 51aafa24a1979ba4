/*
 * tabret: content-based table retrieval engine.
 *
 * C API over the C++ core: opaque handles, integer status codes, and a
 * per-thread error message. Every *_open / *_build / *_train call that
 * succeeds hands back a handle the caller must release with the matching
 * *_free; handles are immutable after creation and safe to share across
 * threads for reads.
 */
#ifndef TABRET_H
#define TABRET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tabret_status {
    TABRET_OK = 0,
    TABRET_ERR_IO = 1,
    TABRET_ERR_PARSE = 2,
    TABRET_ERR_INVALID_ARGUMENT = 3,
    TABRET_ERR_NOT_FOUND = 4,
    TABRET_ERR_STATE = 5,
    TABRET_ERR_INTERNAL = 6
} tabret_status;

const char* tabret_version(void);
const char* tabret_status_name(tabret_status status);

/* Message for the most recent failure on this thread; empty when the last
 * call succeeded. The pointer stays valid until the next API call on the
 * same thread. */
const char* tabret_last_error(void);

typedef struct tabret_corpus tabret_corpus;
typedef struct tabret_queries tabret_queries;
typedef struct tabret_index tabret_index;
typedef struct tabret_hits tabret_hits;
typedef struct tabret_phrase_table tabret_phrase_table;
typedef struct tabret_embeddings tabret_embeddings;
typedef struct tabret_cdssm tabret_cdssm;
typedef struct tabret_models tabret_models;
typedef struct tabret_features tabret_features;
typedef struct tabret_forest tabret_forest;
typedef struct tabret_report tabret_report;

/* ---- corpus ----------------------------------------------------------- */

/* Loads a line-delimited JSON corpus. Irregular tables are rejected (count
 * via tabret_corpus_rejected); duplicate ids fail the load. */
tabret_status tabret_corpus_open(const char* path, tabret_corpus** out);
void tabret_corpus_free(tabret_corpus* corpus);
size_t tabret_corpus_size(const tabret_corpus* corpus);
size_t tabret_corpus_rejected(const tabret_corpus* corpus);
const char* tabret_corpus_rejected_id(const tabret_corpus* corpus, size_t i);
const char* tabret_corpus_rejected_reason(const tabret_corpus* corpus, size_t i);
tabret_status tabret_corpus_save(const tabret_corpus* corpus, const char* path);

/* ---- queries ---------------------------------------------------------- */

tabret_status tabret_queries_open(const char* path, tabret_queries** out);
void tabret_queries_free(tabret_queries* queries);
size_t tabret_queries_size(const tabret_queries* queries);
const char* tabret_queries_id(const tabret_queries* queries, size_t i);
const char* tabret_queries_text(const tabret_queries* queries, size_t i);
tabret_status tabret_queries_save(const tabret_queries* queries, const char* path);

/* Seeded random split at query granularity (sizes floor(n*ratio), remainder
 * to train). Each output is a fresh handle. */
tabret_status tabret_queries_split(const tabret_queries* queries, double train_ratio, double val_ratio,
                                   double test_ratio, uint64_t seed, tabret_queries** train_out,
                                   tabret_queries** val_out, tabret_queries** test_out);

/* ---- BM25 candidate index --------------------------------------------- */

/* aspects_csv: comma-separated subset of caption,headers,cells. */
tabret_status tabret_index_build(const tabret_corpus* corpus, const char* aspects_csv, double k1,
                                 double b, tabret_index** out);
tabret_status tabret_index_open(const char* path, tabret_index** out);
tabret_status tabret_index_save(const tabret_index* index, const char* path);
/* Writes the corpus statistics (num_docs, avg_doc_len, per-word df). */
tabret_status tabret_index_save_stats(const tabret_index* index, const char* path);
void tabret_index_free(tabret_index* index);

/* Top-k candidates with positive BM25 score, best first, ties by table id. */
tabret_status tabret_index_retrieve(const tabret_index* index, const char* query_text, size_t topk,
                                    tabret_hits** out);
tabret_status tabret_index_score(const tabret_index* index, const char* query_text,
                                 const char* table_id, double* score_out);
/* Fraction of labeled queries whose relevant table is among the top-k. */
tabret_status tabret_candidate_recall(const tabret_index* index, const tabret_queries* queries,
                                      size_t topk, double* recall_out);

size_t tabret_hits_count(const tabret_hits* hits);
const char* tabret_hits_table_id(const tabret_hits* hits, size_t i);
double tabret_hits_score(const tabret_hits* hits, size_t i);
void tabret_hits_free(tabret_hits* hits);

/* ---- designed-feature resources --------------------------------------- */

tabret_status tabret_phrase_table_open(const char* path, tabret_phrase_table** out);
/* Adds src -> src entries with probability 1.0 for every known source phrase.
 * Off by default; call before the handle is shared. */
tabret_status tabret_phrase_table_add_identities(tabret_phrase_table* pt);
void tabret_phrase_table_free(tabret_phrase_table* pt);
tabret_status tabret_embeddings_open(const char* path, tabret_embeddings** out);
void tabret_embeddings_free(tabret_embeddings* emb);

/* ---- sub-word (CDSSM-style) sentence encoder --------------------------- */

typedef struct tabret_cdssm_options {
    uint32_t trigram_dims;
    int subword_dim;
    int conv_dim;
    int output_dim;
    int epochs;
    double learning_rate;
    int negatives_per_positive;
    int batch_size;
    double softmax_scale;
    uint64_t seed;
} tabret_cdssm_options;

tabret_cdssm_options tabret_cdssm_options_default(void);

/* Trains on tab-separated paraphrase pairs. When loss_trace_path is non-NULL
 * the per-epoch mean loss is written there, one line per epoch. */
tabret_status tabret_cdssm_train(const char* pairs_path, const tabret_cdssm_options* options,
                                 const char* loss_trace_path, tabret_cdssm** out);
tabret_status tabret_cdssm_open(const char* path, tabret_cdssm** out);
tabret_status tabret_cdssm_save(const tabret_cdssm* cdssm, const char* path);
void tabret_cdssm_free(tabret_cdssm* cdssm);

/* ---- neural aspect models ---------------------------------------------- */

typedef struct tabret_nn_options {
    int embed_dim;
    int hidden_dim;
    double learning_rate;
    int epochs;
    int batch_size;
    int negatives_per_positive;
    uint64_t seed;
} tabret_nn_options;

tabret_nn_options tabret_nn_options_default(void);

/* Trains one model per neural aspect covered by aspects_csv (headers -> the
 * header model; cells -> cell, row and column models; caption -> the caption
 * model). Negatives are drawn from each query's top candidates. */
tabret_status tabret_models_train(const tabret_corpus* corpus, const tabret_queries* train_queries,
                                  const tabret_index* index, const char* aspects_csv,
                                  const tabret_nn_options* options, const char* loss_trace_path,
                                  tabret_models** out);
tabret_status tabret_models_open(const char* path, tabret_models** out);
tabret_status tabret_models_save(const tabret_models* models, const char* path);
void tabret_models_free(tabret_models* models);

/* ---- featurization ------------------------------------------------------ */

typedef struct tabret_featurize_options {
    const char* aspects_csv; /* feature aspects, e.g. "headers,cells,caption" */
    int designed;            /* include the designed features */
    int neural;              /* include the neural scores */
    size_t topk;             /* candidates per query */
} tabret_featurize_options;

tabret_featurize_options tabret_featurize_options_default(void);

/* phrase_table/embeddings/cdssm may be NULL when designed == 0; models may be
 * NULL when neural == 0. */
tabret_status tabret_featurize(const tabret_corpus* corpus, const tabret_queries* queries,
                               const tabret_index* index, const tabret_phrase_table* phrase_table,
                               const tabret_embeddings* embeddings, const tabret_cdssm* cdssm,
                               const tabret_models* models, const tabret_featurize_options* options,
                               tabret_features** out);
tabret_status tabret_features_open(const char* path, tabret_features** out);
tabret_status tabret_features_save(const tabret_features* features, const char* path);
void tabret_features_free(tabret_features* features);

/* ---- LambdaMART ranker -------------------------------------------------- */

typedef struct tabret_ranker_options {
    int num_trees;
    int max_leaves;
    double learning_rate;
    int min_instances_per_leaf;
    uint64_t seed;
} tabret_ranker_options;

tabret_ranker_options tabret_ranker_options_default(void);

/* When map_trace_path is non-NULL the training MAP after each boosting round
 * is written there, one line per tree. */
tabret_status tabret_ranker_train(const tabret_features* train_features,
                                  const tabret_ranker_options* options, const char* map_trace_path,
                                  tabret_forest** out);
tabret_status tabret_forest_open(const char* path, tabret_forest** out);
tabret_status tabret_forest_save(const tabret_forest* forest, const char* path);
void tabret_forest_free(tabret_forest* forest);

/* ---- evaluation --------------------------------------------------------- */

/* Ranks every query's candidates with the forest (or by the raw bm25 feature
 * when forest is NULL) and evaluates against the labels carried by the
 * feature set. filter != 0 applies the standard evaluation filter. */
tabret_status tabret_evaluate(const tabret_features* features, const tabret_forest* forest,
                              int filter, tabret_report** out);

int tabret_report_metrics_defined(const tabret_report* report);
double tabret_report_map(const tabret_report* report);
double tabret_report_p_at_1(const tabret_report* report);
size_t tabret_report_evaluated(const tabret_report* report);
size_t tabret_report_filtered(const tabret_report* report);
int tabret_report_has_baseline(const tabret_report* report);
double tabret_report_baseline_map(const tabret_report* report);
double tabret_report_baseline_p_at_1(const tabret_report* report);
int tabret_report_has_recall(const tabret_report* report);
double tabret_report_recall(const tabret_report* report);

/* Writes report.json, report.txt, pr_curve.csv, length_buckets.csv and
 * ranked.jsonl into out_dir. */
tabret_status tabret_report_write(const tabret_report* report, const char* out_dir);
void tabret_report_free(tabret_report* report);

/* PR-threshold curve over a ranked-results file. thresholds may be NULL with
 * num_thresholds 0 to use an automatic grid over the observed score range. */
tabret_status tabret_pr_curve_file(const char* ranked_results_path, const double* thresholds,
                                   size_t num_thresholds, const char* out_csv_path);

/* ---- end-to-end pipeline ------------------------------------------------- */

typedef struct tabret_pipeline_options {
    const char* corpus_path;
    const char* queries_path;
    const char* phrase_table_path;
    const char* embeddings_path;
    const char* paraphrases_path;
    const char* out_dir;
    const char* index_aspects_csv;   /* default caption,headers */
    const char* feature_aspects_csv; /* default headers,cells,caption */
    double k1;
    double b;
    size_t topk;
    int phrase_table_identities;
    int designed;
    int neural;
    tabret_cdssm_options cdssm;
    tabret_nn_options nn;
    tabret_ranker_options ranker;
    double train_ratio;
    double val_ratio;
    double test_ratio;
    int filter_eval;
    uint64_t seed;
    int ablation; /* run the H / Cel / Cap / H+Cel / H+Cel+Cap grid */
} tabret_pipeline_options;

tabret_pipeline_options tabret_pipeline_options_default(void);

/* Runs ingest -> index -> training -> featurize -> rank -> evaluate, writing
 * every artifact under out_dir. With ablation set, runs the aspect grid and
 * writes ablation.csv; the returned report is the full-aspect row's. */
tabret_status tabret_pipeline_run(const tabret_pipeline_options* options, tabret_report** out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TABRET_H */
