#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/table.hpp"

namespace tabret {

// Lower-cases and splits on every non-alphanumeric character. Punctuation-only
// runs vanish; digit runs survive as tokens ("7,115" -> "7", "115").
std::vector<std::string> tokenize(const std::string& text);

std::string join_tokens(const std::vector<std::string>& tokens);

struct CorpusStats {
    size_t num_docs = 0;
    std::unordered_map<std::string, size_t> doc_freq;
    double avg_doc_len = 0.0;
    std::vector<Aspect> aspect_config;

    // Smoothed BM25 idf: ln(1 + (N - df + 0.5) / (df + 0.5)). Positive for
    // every df <= N, which keeps BM25 sums non-negative. Unseen words use
    // df = 0.
    double idf(const std::string& word) const;

    // Vocabulary ids in lexicographic word order, rebuilt on demand; stable
    // across save/load.
    std::map<std::string, uint32_t> vocabulary() const;
};

// One document per table: the concatenation of aspect_text over the given
// aspect configuration. doc_freq counts presence, not multiplicity.
CorpusStats build_stats(const Corpus& corpus, const std::vector<Aspect>& aspects);

// Line-based text format: header with version, aspects, num_docs and
// avg_doc_len, then one `word df` line per word.
void save_stats(const CorpusStats& stats, const std::string& path);
CorpusStats load_stats(const std::string& path);

// Sparse letter-trigram counts hashed into a fixed bucket space.
struct TrigramVector {
    std::map<uint32_t, double> counts;  // bucket id -> count
    uint32_t dims = 0;
};

// Buckets every character trigram of #token# with FNV-1a mod dims and sums
// the counts over all tokens.
TrigramVector letter_trigrams(const std::vector<std::string>& tokens, uint32_t dims);

// Trigram vector of a single token (the per-position input of the sub-word
// encoder).
TrigramVector token_trigrams(const std::string& token, uint32_t dims);

}  // namespace tabret
