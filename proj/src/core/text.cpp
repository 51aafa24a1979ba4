#include "core/text.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace tabret {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

double CorpusStats::idf(const std::string& word) const {
    auto it = doc_freq.find(word);
    double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    double n = static_cast<double>(num_docs);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::map<std::string, uint32_t> CorpusStats::vocabulary() const {
    std::map<std::string, uint32_t> vocab;
    for (const auto& [word, df] : doc_freq) vocab[word] = 0;
    uint32_t id = 0;
    for (auto& [word, wid] : vocab) wid = id++;
    return vocab;
}

CorpusStats build_stats(const Corpus& corpus, const std::vector<Aspect>& aspects) {
    if (corpus.tables.empty()) fail(ErrorKind::InvalidArgument, "cannot build stats over an empty corpus");
    CorpusStats stats;
    stats.aspect_config = aspects;
    stats.num_docs = corpus.tables.size();
    size_t total_len = 0;
    for (const auto& table : corpus.tables) {
        std::vector<std::string> doc;
        for (Aspect a : aspects) {
            std::vector<std::string> part = aspect_text(table, a);
            doc.insert(doc.end(), part.begin(), part.end());
        }
        total_len += doc.size();
        std::map<std::string, bool> seen;
        for (const auto& w : doc) {
            if (!seen.count(w)) {
                seen[w] = true;
                ++stats.doc_freq[w];
            }
        }
    }
    stats.avg_doc_len = static_cast<double>(total_len) / static_cast<double>(stats.num_docs);
    return stats;
}

void save_stats(const CorpusStats& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write stats file: " + path);
    out.precision(17);
    out << "tabret-stats v1\n";
    out << "aspects " << aspect_list_to_string(stats.aspect_config) << "\n";
    out << "num_docs " << stats.num_docs << "\n";
    out << "avg_doc_len " << stats.avg_doc_len << "\n";
    // sorted for a reproducible file
    std::map<std::string, size_t> sorted(stats.doc_freq.begin(), stats.doc_freq.end());
    for (const auto& [word, df] : sorted) out << word << " " << df << "\n";
}

CorpusStats load_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open stats file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tabret-stats v1") {
        fail(ErrorKind::Parse, "not a tabret-stats v1 file: " + path);
    }
    CorpusStats stats;
    std::string key;
    {
        std::getline(in, line);
        std::istringstream ss(line);
        std::string aspects;
        ss >> key >> aspects;
        if (key != "aspects") fail(ErrorKind::Parse, "stats file missing aspects line: " + path);
        stats.aspect_config = parse_aspect_list(aspects);
    }
    {
        std::getline(in, line);
        std::istringstream ss(line);
        ss >> key >> stats.num_docs;
        if (key != "num_docs") fail(ErrorKind::Parse, "stats file missing num_docs line: " + path);
    }
    {
        std::getline(in, line);
        std::istringstream ss(line);
        ss >> key >> stats.avg_doc_len;
        if (key != "avg_doc_len") fail(ErrorKind::Parse, "stats file missing avg_doc_len line: " + path);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        size_t df = 0;
        if (!(ss >> word >> df)) fail(ErrorKind::Parse, "bad stats line: " + line);
        stats.doc_freq[word] = df;
    }
    return stats;
}

TrigramVector letter_trigrams(const std::vector<std::string>& tokens, uint32_t dims) {
    if (dims == 0) fail(ErrorKind::InvalidArgument, "trigram hash space must be positive");
    TrigramVector vec;
    vec.dims = dims;
    for (const auto& token : tokens) {
        std::string padded = "#" + token + "#";
        if (padded.size() < 3) continue;
        for (size_t i = 0; i + 3 <= padded.size(); ++i) {
            uint32_t bucket = static_cast<uint32_t>(fnv1a64(padded.data() + i, 3) % dims);
            vec.counts[bucket] += 1.0;
        }
    }
    return vec;
}

TrigramVector token_trigrams(const std::string& token, uint32_t dims) {
    return letter_trigrams({token}, dims);
}

}  // namespace tabret
