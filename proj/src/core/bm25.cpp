#include "core/bm25.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "core/common.hpp"

namespace tabret {

Bm25Index Bm25Index::build(const Corpus& corpus, const std::vector<Aspect>& aspects,
                           double k1, double b) {
    if (corpus.tables.empty()) fail(ErrorKind::InvalidArgument, "cannot index an empty corpus");
    if (k1 < 0.0) fail(ErrorKind::InvalidArgument, "k1 must be >= 0");
    if (b < 0.0 || b > 1.0) fail(ErrorKind::InvalidArgument, "b must be in [0, 1]");

    Bm25Index index;
    index.k1_ = k1;
    index.b_ = b;
    index.stats_ = build_stats(corpus, aspects);

    // Documents are formed exactly as in build_stats so idf and avg_doc_len
    // refer to the same token streams the postings cover.
    std::map<std::string, std::map<std::string, uint32_t>> tf_by_word;  // word -> table -> tf
    for (const auto& table : corpus.tables) {
        std::vector<std::string> doc;
        for (Aspect a : aspects) {
            std::vector<std::string> part = aspect_text(table, a);
            doc.insert(doc.end(), part.begin(), part.end());
        }
        index.doc_len_[table.id] = doc.size();
        for (const auto& w : doc) ++tf_by_word[w][table.id];
    }
    for (auto& [word, tfs] : tf_by_word) {
        std::vector<Posting>& list = index.postings_[word];
        list.reserve(tfs.size());
        for (const auto& [table_id, tf] : tfs) list.push_back({table_id, tf});
        // std::map iteration already gives ascending table id
    }
    return index;
}

double Bm25Index::term_score(double idf, double tf, double doc_len) const {
    double norm = k1_ * (1.0 - b_ + b_ * doc_len / stats_.avg_doc_len);
    return idf * tf * (k1_ + 1.0) / (tf + norm);
}

double Bm25Index::score(const std::vector<std::string>& query_tokens, const std::string& table_id) const {
    auto len_it = doc_len_.find(table_id);
    if (len_it == doc_len_.end()) fail(ErrorKind::NotFound, "table not indexed: " + table_id);
    double doc_len = static_cast<double>(len_it->second);

    double total = 0.0;
    for (const auto& token : query_tokens) {
        auto post_it = postings_.find(token);
        if (post_it == postings_.end()) continue;
        const std::vector<Posting>& list = post_it->second;
        auto it = std::lower_bound(list.begin(), list.end(), table_id,
                                   [](const Posting& p, const std::string& id) { return p.table_id < id; });
        if (it == list.end() || it->table_id != table_id) continue;
        total += term_score(stats_.idf(token), static_cast<double>(it->term_frequency), doc_len);
    }
    return total;
}

std::vector<ScoredTable> Bm25Index::retrieve_topk(const std::vector<std::string>& query_tokens, size_t k) const {
    if (k == 0) fail(ErrorKind::InvalidArgument, "k must be >= 1");

    // Accumulate over postings of the query tokens only; tables sharing no
    // token keep score 0 and are never returned.
    std::map<std::string, double> scores;
    for (const auto& token : query_tokens) {
        auto post_it = postings_.find(token);
        if (post_it == postings_.end()) continue;
        double idf = stats_.idf(token);
        for (const Posting& p : post_it->second) {
            double doc_len = static_cast<double>(doc_len_.at(p.table_id));
            scores[p.table_id] += term_score(idf, static_cast<double>(p.term_frequency), doc_len);
        }
    }

    std::vector<ScoredTable> ranked;
    ranked.reserve(scores.size());
    for (const auto& [table_id, s] : scores) {
        if (s > 0.0) ranked.push_back({table_id, s});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ScoredTable& a, const ScoredTable& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.table_id < b.table_id;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

void Bm25Index::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write index file: " + path);
    out.precision(17);
    out << "tabret-index v1\n";
    out << "aspects " << aspect_list_to_string(stats_.aspect_config) << "\n";
    out << "k1 " << k1_ << "\n";
    out << "b " << b_ << "\n";
    out << "num_docs " << stats_.num_docs << "\n";
    out << "avg_doc_len " << stats_.avg_doc_len << "\n";
    std::map<std::string, size_t> lens(doc_len_.begin(), doc_len_.end());
    out << "doc_lens " << lens.size() << "\n";
    for (const auto& [id, len] : lens) out << id << " " << len << "\n";
    std::map<std::string, const std::vector<Posting>*> words;
    for (const auto& [word, list] : postings_) words[word] = &list;
    out << "postings " << words.size() << "\n";
    for (const auto& [word, list] : words) {
        out << word << " " << stats_.doc_freq.at(word) << " " << list->size();
        for (const Posting& p : *list) out << " " << p.table_id << " " << p.term_frequency;
        out << "\n";
    }
}

Bm25Index Bm25Index::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open index file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tabret-index v1") {
        fail(ErrorKind::Parse, "not a tabret-index v1 file: " + path);
    }
    Bm25Index index;
    auto expect = [&](const std::string& key) -> std::istringstream {
        if (!std::getline(in, line)) fail(ErrorKind::Parse, "truncated index file: " + path);
        std::istringstream ss(line);
        std::string k;
        ss >> k;
        if (k != key) fail(ErrorKind::Parse, "index file: expected '" + key + "', got '" + k + "'");
        return ss;
    };
    {
        auto ss = expect("aspects");
        std::string aspects;
        ss >> aspects;
        index.stats_.aspect_config = parse_aspect_list(aspects);
    }
    expect("k1") >> index.k1_;
    expect("b") >> index.b_;
    expect("num_docs") >> index.stats_.num_docs;
    expect("avg_doc_len") >> index.stats_.avg_doc_len;
    size_t n = 0;
    expect("doc_lens") >> n;
    for (size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail(ErrorKind::Parse, "truncated doc_lens section: " + path);
        std::istringstream ss(line);
        std::string id;
        size_t len = 0;
        ss >> id >> len;
        index.doc_len_[id] = len;
    }
    expect("postings") >> n;
    for (size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) fail(ErrorKind::Parse, "truncated postings section: " + path);
        std::istringstream ss(line);
        std::string word;
        size_t df = 0, count = 0;
        ss >> word >> df >> count;
        index.stats_.doc_freq[word] = df;
        std::vector<Posting>& list = index.postings_[word];
        list.resize(count);
        for (size_t j = 0; j < count; ++j) {
            if (!(ss >> list[j].table_id >> list[j].term_frequency)) {
                fail(ErrorKind::Parse, "bad postings line for word '" + word + "'");
            }
        }
    }
    return index;
}

}  // namespace tabret
