#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/cdssm.hpp"
#include "core/eval.hpp"
#include "core/featurize.hpp"
#include "core/lambdamart.hpp"
#include "core/neural.hpp"
#include "core/table.hpp"

namespace tabret {

struct PipelineConfig {
    std::string corpus_path;
    std::string queries_path;
    std::string phrase_table_path;
    std::string embeddings_path;
    std::string paraphrases_path;
    std::string out_dir;

    std::vector<Aspect> index_aspects = {Aspect::Caption, Aspect::Headers};
    std::vector<Aspect> feature_aspects = {Aspect::Headers, Aspect::Cells, Aspect::Caption};
    double k1 = 1.2;
    double b = 0.75;
    size_t topk = 50;
    bool phrase_table_identities = false;

    bool designed = true;
    bool neural = true;

    CdssmConfig cdssm;
    NnTrainConfig nn;
    int nn_negatives_per_positive = 4;
    LambdaMartConfig ranker;

    double train_ratio = 0.7;
    double val_ratio = 0.1;
    double test_ratio = 0.2;
    bool filter_eval = true;

    uint64_t seed = 13;  // fanned out to every stage
};

struct PipelineResult {
    std::string setting_label;     // BM25 / Feature / NeuralNet / Feature + NeuralNet
    EvalReport report;             // trained system on the test split
    EvalReport bm25_report;        // candidates ranked by BM25 on the same split
    double candidate_recall = 0.0;
    std::vector<double> ranker_train_map;
    std::vector<double> ranker_val_map;  // one entry per checkpoint (every 10 trees)
};

// Human-readable label matching the toggles (mirrors the report rows of the
// experiment section).
std::string setting_label(bool designed, bool neural);

// Ingest -> stats/index -> retrieve -> train encoders and aspect models ->
// featurize -> train ranker -> evaluate. Every intermediate artifact lands in
// out_dir; any stage failure carries the stage name.
PipelineResult run_pipeline(const PipelineConfig& config);

struct AblationRow {
    std::string label;  // H, Cel, Cap, H+Cel, H+Cel+Cap
    std::vector<Aspect> aspects;
    PipelineResult result;
};

// Reruns the pipeline once per aspect configuration row.
std::vector<AblationRow> run_ablation(const PipelineConfig& base);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace tabret
