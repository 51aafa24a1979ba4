#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace tabret {

// SMT-style phrase table: each entry carries a source phrase, a target phrase
// and the two directed translation probabilities. Two monolingual phrases are
// scored as paraphrases through the targets they share.
class PhraseTable {
public:
    struct Translation {
        double p_tgt_given_src = 0.0;
        double p_src_given_tgt = 0.0;
    };

    void add(const std::string& src, const std::string& tgt, double p_tgt_given_src,
             double p_src_given_tgt);

    // score(x; y) = sum over shared targets t of p(t | x) * p(y | t).
    double paraphrase_score(const std::string& src_x, const std::string& src_y) const;

    bool contains(const std::string& src) const { return entries_.count(src) > 0; }
    size_t size() const { return entries_.size(); }
    size_t max_phrase_len() const { return max_phrase_len_; }

    // Adds src -> src with both probabilities 1.0 for every known source and
    // target phrase. Off by default in every consumer.
    void add_identities();

    // One entry per line: `src ||| tgt ||| p_tgt_given_src p_src_given_tgt`.
    static PhraseTable load(const std::string& path);
    void save(const std::string& path) const;

private:
    // src phrase -> (tgt phrase -> probabilities)
    std::unordered_map<std::string, std::unordered_map<std::string, Translation>> entries_;
    size_t max_phrase_len_ = 0;
};

}  // namespace tabret
