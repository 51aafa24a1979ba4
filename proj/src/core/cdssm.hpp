#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/text.hpp"

namespace tabret {

// Convolutional sub-word sentence encoder: letter-trigram hashing per token,
// trigram embedding, width-3 convolution over token positions, element-wise
// max pooling, tanh projection to the output space. Both sides of a pair are
// encoded with the same parameters and compared with cosine.
struct CdssmParams {
    Eigen::MatrixXd trigram_embedding;  // trigram_dims x subword_dim
    Eigen::MatrixXd conv;               // conv_dim x 3*subword_dim
    Eigen::MatrixXd output;             // output_dim x conv_dim

    uint32_t trigram_dims() const { return static_cast<uint32_t>(trigram_embedding.rows()); }
    int subword_dim() const { return static_cast<int>(trigram_embedding.cols()); }
    int conv_dim() const { return static_cast<int>(conv.rows()); }
    int output_dim() const { return static_cast<int>(output.rows()); }

    void save(const std::string& path) const;
    static CdssmParams load(const std::string& path);
};

struct CdssmConfig {
    uint32_t trigram_dims = 16384;
    int subword_dim = 32;
    int conv_dim = 64;
    int output_dim = 32;
    int epochs = 10;
    double learning_rate = 0.1;
    int negatives_per_positive = 4;
    int batch_size = 16;
    double softmax_scale = 10.0;  // sharpens cosine before the softmax
    uint64_t seed = 1;
};

CdssmParams init_cdssm(const CdssmConfig& config);

// Encodes a token sequence to a fixed vector. Sequences shorter than the
// convolution window are right-padded with all-zero positions; the empty
// sequence encodes to the zero vector.
Eigen::VectorXd subword_encode(const std::vector<std::string>& tokens, const CdssmParams& params);

struct CdssmTrainResult {
    CdssmParams params;
    std::vector<double> epoch_loss;
};

// Trains on (text, paraphrase) pairs by maximizing the softmax of the positive
// cosine against sampled in-batch negatives. Deterministic under a fixed seed.
CdssmTrainResult train_subword_encoder(const std::vector<std::pair<std::string, std::string>>& pairs,
                                       const CdssmConfig& config);

// Loads tab-separated `text<TAB>paraphrase` lines.
std::vector<std::pair<std::string, std::string>> load_paraphrase_pairs(const std::string& path);

}  // namespace tabret
