#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

namespace tabret {

// Pre-trained word vectors, loaded read-only from a text file. Out-of-vocabulary
// words are skipped by every consumer (no random fallback vectors), so scores
// are fully determined by the embedding file.
class EmbeddingTable {
public:
    // Text format: optional `vocab_size dim` header line, then one line per
    // word: the word followed by dim decimal numbers.
    static EmbeddingTable load(const std::string& path);

    const Eigen::VectorXd* find(const std::string& word) const;
    int dim() const { return dim_; }
    size_t size() const { return vectors_.size(); }

    // Mean of the in-vocabulary token vectors; zero vector when none are known.
    Eigen::VectorXd average(const std::vector<std::string>& tokens) const;

private:
    std::unordered_map<std::string, Eigen::VectorXd> vectors_;
    int dim_ = 0;
};

// Cosine of two vectors; 0 when either has zero norm.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace tabret
