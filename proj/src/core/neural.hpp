#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "core/gru.hpp"
#include "core/table.hpp"

namespace tabret {

// The five neural matching scores: attention reads over header / cell / row /
// column memories, plus the caption encoder head.
enum class NeuralAspect { Header, Cell, Row, Column, Caption };

constexpr std::array<NeuralAspect, 5> kNeuralAspects = {
    NeuralAspect::Header, NeuralAspect::Cell, NeuralAspect::Row, NeuralAspect::Column,
    NeuralAspect::Caption};

const char* neural_aspect_name(NeuralAspect a);
NeuralAspect neural_aspect_from_name(const std::string& name);

// Maps a neural aspect to the table aspect its text comes from.
Aspect source_aspect(NeuralAspect a);

class Vocab {
public:
    // id 0 is reserved for unknown words.
    static Vocab build(const std::vector<std::vector<std::string>>& token_lists);

    int id(const std::string& word) const;
    size_t size() const { return word_to_id_.size() + 1; }
    const std::map<std::string, int>& words() const { return word_to_id_; }
    void insert(const std::string& word);

private:
    std::map<std::string, int> word_to_id_;
};

struct AttentionParams {
    Eigen::VectorXd w;  // scores [m_i; v_q], length mem_dim + query_dim
    double b = 0.0;
};

struct OutputLayer {
    Eigen::MatrixXd W;  // 2 x input
    Eigen::VectorXd b;  // 2
};

// One independently trained model per neural aspect: its own embeddings,
// query encoder, and head.
struct AspectModel {
    NeuralAspect aspect = NeuralAspect::Header;
    int embed_dim = 64;
    int hidden_dim = 64;
    Vocab vocab;
    Eigen::MatrixXd embeddings;  // vocab.size() x embed_dim
    GruParams query_fwd, query_bwd;
    GruParams caption_fwd, caption_bwd;  // caption aspect only
    AttentionParams attention;           // memory aspects only
    OutputLayer output;

    int query_dim() const { return 2 * hidden_dim; }
    Eigen::VectorXd embed(int word_id) const { return embeddings.row(word_id).transpose(); }
};

// A memory vector expressed as a linear combination of embedding rows, kept
// so gradients can flow back into the embeddings.
struct LinearCombo {
    std::vector<std::pair<int, double>> terms;  // (embedding row, coefficient)
};

struct MemorySet {
    std::vector<LinearCombo> combos;
    std::vector<Eigen::VectorXd> vectors;

    size_t size() const { return vectors.size(); }
};

struct TableMemories {
    MemorySet headers;  // one vector per header cell
    MemorySet cells;    // one vector per table cell, row-major
    MemorySet rows;     // uniform average of the row's cell vectors
    MemorySet columns;  // uniform average of the column's cell vectors
};

// Embeds each header/cell as the average of its word embeddings (empty cell
// -> zero vector) and derives row/column vectors by uniform averaging.
TableMemories build_memories(const Table& table, const AspectModel& model);

// The memory set a given model attends over.
MemorySet build_memory_set(const Table& table, const AspectModel& model);

// Bi-directional GRU encoding: concatenation of the two final hidden states.
Eigen::VectorXd encode_query(const AspectModel& model, const std::vector<std::string>& tokens);

struct AttentionRead {
    std::vector<double> weights;
    Eigen::VectorXd read;
};

// alpha_i = softmax_i tanh(w . [m_i; v_q] + b); read = sum alpha_i m_i.
AttentionRead attention_read(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                             const AttentionParams& params);

// Attention read, concat with the query vector, linear layer, softmax; the
// first component is the relevance. Empty memory scores 0.
double nn1_score(const std::vector<Eigen::VectorXd>& memory, const Eigen::VectorXd& v_q,
                 const AspectModel& model);

// Caption encoded with its own bi-directional GRU, concatenated with v_q,
// linear layer, softmax; empty caption scores 0.
double nn2_caption_score(const std::vector<std::string>& caption_tokens,
                         const std::vector<std::string>& query_tokens, const AspectModel& model);

// Relevance of one query/table pair under one aspect model.
double aspect_score(const AspectModel& model, const std::vector<std::string>& query_tokens,
                    const Table& table);

// Bulk-scoring helpers so featurization can cache per-table and per-query
// encodings across pairs.
Eigen::VectorXd encode_caption(const AspectModel& model, const std::vector<std::string>& caption_tokens);
double nn2_from_encodings(const Eigen::VectorXd& caption_encoding, const Eigen::VectorXd& v_q,
                          const AspectModel& model);

// The trained models, keyed by aspect; ablation runs hold a subset.
struct NeuralModels {
    std::map<NeuralAspect, AspectModel> models;

    bool has(NeuralAspect a) const { return models.count(a) > 0; }
    void save(const std::string& path) const;
    static NeuralModels load(const std::string& path);
};

// The five scores in fixed order (header, cell, row, column, caption); aspects
// without a model in the bundle score 0.
std::array<double, 5> neural_feature_vector(const std::vector<std::string>& query_tokens,
                                            const Table& table, const NeuralModels& models);

struct NnExample {
    std::vector<std::string> query_tokens;
    const Table* table = nullptr;
    int label = 0;  // 1 relevant, 0 not
};

struct NnTrainConfig {
    int embed_dim = 64;
    int hidden_dim = 64;
    double learning_rate = 0.05;
    int epochs = 20;
    int batch_size = 32;
    uint64_t seed = 1;
};

struct AspectModelGrads {
    Eigen::MatrixXd embeddings;
    GruGrads query_fwd, query_bwd, caption_fwd, caption_bwd;
    Eigen::VectorXd attention_w;
    double attention_b = 0.0;
    Eigen::MatrixXd output_W;
    Eigen::VectorXd output_b;

    static AspectModelGrads zeros_like(const AspectModel& model);
};

// Fresh seeded model with a vocabulary drawn from the examples.
AspectModel init_aspect_model(NeuralAspect aspect, const std::vector<NnExample>& examples,
                              const NnTrainConfig& config);

// Mean negative log-likelihood over the usable examples (examples whose
// aspect text is empty are skipped; they score 0 by convention and carry no
// gradient). Returns the number of usable examples.
size_t nn_loss_and_grads(const AspectModel& model, const std::vector<NnExample>& examples,
                         double& loss, AspectModelGrads* grads);

struct NnTrainResult {
    AspectModel model;
    std::vector<double> epoch_loss;
};

// Mini-batch SGD on the two-way softmax NLL, backpropagating through output
// layers, attention, both GRU directions and the embeddings.
NnTrainResult train_aspect_model(const std::vector<NnExample>& examples, NeuralAspect aspect,
                                 const NnTrainConfig& config);

struct GradientCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    size_t coords_checked = 0;
};

// Central-difference verification of every parameter tensor. At least
// `coords_per_tensor` coordinates are sampled per tensor (whole tensor when
// smaller). `corrupt_tensor` perturbs the analytic gradient of one tensor to
// prove the check can fail.
GradientCheckResult gradient_check(const AspectModel& model, const std::vector<NnExample>& examples,
                                   double epsilon, size_t coords_per_tensor, uint64_t seed,
                                   const std::string& corrupt_tensor = "");

}  // namespace tabret
