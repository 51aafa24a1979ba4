#include "core/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "core/common.hpp"

namespace tabret {

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open embedding file: " + path);

    EmbeddingTable table;
    std::string line;
    size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (first) {
            first = false;
            // optional `vocab_size dim` header: exactly two integer fields
            size_t v = 0;
            int d = 0;
            std::string rest;
            std::istringstream probe(line);
            if ((probe >> v >> d) && !(probe >> rest) && d > 0) continue;
        }
        std::string word;
        if (!(ss >> word)) continue;
        std::vector<double> values;
        double x = 0.0;
        while (ss >> x) values.push_back(x);
        if (values.empty()) fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": no vector values");
        if (table.dim_ == 0) {
            table.dim_ = static_cast<int>(values.size());
        } else if (static_cast<int>(values.size()) != table.dim_) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": vector length " +
                                       std::to_string(values.size()) + " != " + std::to_string(table.dim_));
        }
        Eigen::VectorXd vec(table.dim_);
        for (int i = 0; i < table.dim_; ++i) vec[i] = values[i];
        table.vectors_[word] = std::move(vec);
    }
    if (table.vectors_.empty()) fail(ErrorKind::Parse, "embedding file has no vectors: " + path);
    return table;
}

const Eigen::VectorXd* EmbeddingTable::find(const std::string& word) const {
    auto it = vectors_.find(word);
    return it == vectors_.end() ? nullptr : &it->second;
}

Eigen::VectorXd EmbeddingTable::average(const std::vector<std::string>& tokens) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
    size_t known = 0;
    for (const auto& token : tokens) {
        if (const Eigen::VectorXd* vec = find(token)) {
            sum += *vec;
            ++known;
        }
    }
    if (known > 0) sum /= static_cast<double>(known);
    return sum;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double na = a.norm();
    double nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

}  // namespace tabret
