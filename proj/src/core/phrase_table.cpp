#include "core/phrase_table.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "core/common.hpp"
#include "core/text.hpp"

namespace tabret {

namespace {

size_t phrase_len(const std::string& phrase) {
    size_t words = 0;
    bool in_word = false;
    for (char c : phrase) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++words;
        }
    }
    return words;
}

}  // namespace

void PhraseTable::add(const std::string& src, const std::string& tgt, double p_tgt_given_src,
                      double p_src_given_tgt) {
    if (src.empty() || tgt.empty()) fail(ErrorKind::InvalidArgument, "phrase table phrases must be non-empty");
    if (p_tgt_given_src < 0.0 || p_tgt_given_src > 1.0 || p_src_given_tgt < 0.0 || p_src_given_tgt > 1.0) {
        fail(ErrorKind::InvalidArgument, "phrase table probabilities must lie in [0, 1]");
    }
    entries_[src][tgt] = Translation{p_tgt_given_src, p_src_given_tgt};
    max_phrase_len_ = std::max({max_phrase_len_, phrase_len(src), phrase_len(tgt)});
}

double PhraseTable::paraphrase_score(const std::string& src_x, const std::string& src_y) const {
    auto x_it = entries_.find(src_x);
    auto y_it = entries_.find(src_y);
    if (x_it == entries_.end() || y_it == entries_.end()) return 0.0;
    double score = 0.0;
    for (const auto& [tgt, x_probs] : x_it->second) {
        auto shared = y_it->second.find(tgt);
        if (shared == y_it->second.end()) continue;
        score += x_probs.p_tgt_given_src * shared->second.p_src_given_tgt;
    }
    return score;
}

void PhraseTable::add_identities() {
    std::set<std::string> phrases;
    for (const auto& [src, tgts] : entries_) phrases.insert(src);
    for (const std::string& p : phrases) add(p, p, 1.0, 1.0);
}

PhraseTable PhraseTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open phrase table: " + path);
    PhraseTable pt;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t sep1 = line.find(" ||| ");
        size_t sep2 = sep1 == std::string::npos ? std::string::npos : line.find(" ||| ", sep1 + 5);
        if (sep2 == std::string::npos) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected `src ||| tgt ||| p p`");
        }
        std::string src = join_tokens(tokenize(line.substr(0, sep1)));
        std::string tgt = join_tokens(tokenize(line.substr(sep1 + 5, sep2 - sep1 - 5)));
        std::istringstream probs(line.substr(sep2 + 5));
        double p_ts = 0.0, p_st = 0.0;
        if (!(probs >> p_ts >> p_st)) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": bad probability pair");
        }
        if (src.empty() || tgt.empty()) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": empty phrase after tokenization");
        }
        pt.add(src, tgt, p_ts, p_st);
    }
    return pt;
}

void PhraseTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write phrase table: " + path);
    out.precision(17);
    std::map<std::string, std::map<std::string, Translation>> sorted;
    for (const auto& [src, tgts] : entries_)
        for (const auto& [tgt, tr] : tgts) sorted[src][tgt] = tr;
    for (const auto& [src, tgts] : sorted)
        for (const auto& [tgt, tr] : tgts)
            out << src << " ||| " << tgt << " ||| " << tr.p_tgt_given_src << " " << tr.p_src_given_tgt << "\n";
}

}  // namespace tabret
