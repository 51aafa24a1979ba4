#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/bm25.hpp"
#include "core/table.hpp"

namespace tabret {

struct RankedResult {
    std::string query_id;
    std::vector<ScoredTable> candidates;       // descending score
    std::vector<std::string> relevant_ids;     // ground truth
    size_t query_length = 0;                   // token count, for bucket reports
};

// Mean over all relevant items of precision at their rank; relevant items
// missing from the candidate list keep inflating the denominator.
double average_precision(const RankedResult& result);

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    bool precision_defined = false;  // false when no query is answered
    double recall = 0.0;
};

struct LengthBucket {
    int length = 0;  // -1 labels the merged tail bucket
    size_t count = 0;
    double p_at_1 = 0.0;
};

struct EvalReport {
    bool metrics_defined = false;  // false when every query was filtered
    double map = 0.0;
    double p_at_1 = 0.0;
    size_t num_evaluated = 0;
    size_t num_filtered = 0;
    std::vector<PrPoint> pr_points;
    std::vector<LengthBucket> length_buckets;
};

// With the filter on, queries with exactly one
// returned candidate or with no relevant table among the candidates are
// dropped and counted as filtered.
EvalReport evaluate(const std::vector<RankedResult>& results, bool filter);

// Fraction of labeled queries whose relevant table appears in the top-k
// candidates; queries without labels are excluded.
double candidate_recall(const Bm25Index& index, const std::vector<Query>& queries, size_t k);

// precision/recall of answered queries as the minimum top-score threshold
// rises; thresholds must be ascending. Precision is flagged undefined when
// nothing is answered, never reported as 0.
std::vector<PrPoint> pr_curve(const std::vector<RankedResult>& results,
                              const std::vector<double>& thresholds);

// Evenly spaced ascending grid over the observed top-score range, starting
// just below the minimum so the first point answers every query.
std::vector<double> default_threshold_grid(const std::vector<RankedResult>& results,
                                           size_t steps = 20);

// P@1 per exact query token length; lengths with fewer than min_count queries
// are merged into one tail bucket (length = -1). Empty buckets are never
// emitted.
std::vector<LengthBucket> length_bucket_report(const std::vector<RankedResult>& results,
                                               size_t min_count = 5);

struct DatasetSplit {
    std::vector<Query> train, validation, test;
};

// Seeded random split at query granularity; sizes are floor(n * ratio) with
// the remainder assigned to train.
DatasetSplit split_dataset(const std::vector<Query>& queries, double train_ratio, double val_ratio,
                           double test_ratio, uint64_t seed);

// Report writers shared by the CLI and the pipeline.
void write_report_json(const EvalReport& report, const std::string& setting_label,
                       const EvalReport* bm25_baseline, const std::string& path);
void write_report_text(const EvalReport& report, const std::string& setting_label,
                       const EvalReport* bm25_baseline, const std::string& path);
void write_pr_csv(const std::vector<PrPoint>& points, const std::string& path);
void write_length_buckets_csv(const std::vector<LengthBucket>& buckets, const std::string& path);
void write_ranked_results(const std::vector<RankedResult>& results, const std::string& path);
std::vector<RankedResult> load_ranked_results(const std::string& path);

}  // namespace tabret
