#include "core/cdssm.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "core/common.hpp"
#include "core/serialize.hpp"

namespace tabret {

namespace {

constexpr int kWindow = 3;

struct EncodeCache {
    std::vector<TrigramVector> trigrams;  // one per (padded) position
    Eigen::MatrixXd embedded;             // subword_dim x padded_len
    Eigen::MatrixXd conv_out;             // conv_dim x num_windows, post-tanh
    std::vector<int> argmax;              // winning window per conv channel
    Eigen::VectorXd pooled;               // conv_dim
    Eigen::VectorXd out;                  // output_dim, post-tanh
    size_t real_len = 0;
};

EncodeCache encode_cached(const std::vector<std::string>& tokens, const CdssmParams& params) {
    EncodeCache cache;
    cache.real_len = tokens.size();
    if (tokens.empty()) {
        cache.out = Eigen::VectorXd::Zero(params.output_dim());
        return cache;
    }
    size_t padded = std::max(tokens.size(), static_cast<size_t>(kWindow));
    cache.trigrams.resize(padded);
    cache.embedded = Eigen::MatrixXd::Zero(params.subword_dim(), static_cast<Eigen::Index>(padded));
    for (size_t i = 0; i < tokens.size(); ++i) {
        cache.trigrams[i] = token_trigrams(tokens[i], params.trigram_dims());
        Eigen::VectorXd e = Eigen::VectorXd::Zero(params.subword_dim());
        for (const auto& [bucket, count] : cache.trigrams[i].counts) {
            e += count * params.trigram_embedding.row(bucket).transpose();
        }
        cache.embedded.col(static_cast<Eigen::Index>(i)) = e;
    }
    size_t windows = padded - kWindow + 1;
    cache.conv_out.resize(params.conv_dim(), static_cast<Eigen::Index>(windows));
    Eigen::VectorXd window_vec(3 * params.subword_dim());
    for (size_t p = 0; p < windows; ++p) {
        for (int w = 0; w < kWindow; ++w) {
            window_vec.segment(w * params.subword_dim(), params.subword_dim()) =
                cache.embedded.col(static_cast<Eigen::Index>(p + w));
        }
        cache.conv_out.col(static_cast<Eigen::Index>(p)) = (params.conv * window_vec).array().tanh();
    }
    cache.pooled.resize(params.conv_dim());
    cache.argmax.resize(params.conv_dim());
    for (int j = 0; j < params.conv_dim(); ++j) {
        int best = 0;
        double best_val = cache.conv_out(j, 0);
        for (size_t p = 1; p < windows; ++p) {
            if (cache.conv_out(j, static_cast<Eigen::Index>(p)) > best_val) {
                best_val = cache.conv_out(j, static_cast<Eigen::Index>(p));
                best = static_cast<int>(p);
            }
        }
        cache.pooled[j] = best_val;
        cache.argmax[j] = best;
    }
    cache.out = (params.output * cache.pooled).array().tanh();
    return cache;
}

struct CdssmGrads {
    std::unordered_map<uint32_t, Eigen::VectorXd> trigram_rows;  // sparse rows of dE
    Eigen::MatrixXd conv;
    Eigen::MatrixXd output;

    explicit CdssmGrads(const CdssmParams& params)
        : conv(Eigen::MatrixXd::Zero(params.conv.rows(), params.conv.cols())),
          output(Eigen::MatrixXd::Zero(params.output.rows(), params.output.cols())) {}
};

void backward(const EncodeCache& cache, const Eigen::VectorXd& dout, const CdssmParams& params,
              CdssmGrads& grads) {
    if (cache.real_len == 0) return;
    // y = tanh(W_out m)
    Eigen::VectorXd dpre_out = dout.array() * (1.0 - cache.out.array().square());
    grads.output += dpre_out * cache.pooled.transpose();
    Eigen::VectorXd dpooled = params.output.transpose() * dpre_out;

    size_t padded = std::max(cache.real_len, static_cast<size_t>(kWindow));
    size_t windows = padded - kWindow + 1;
    Eigen::MatrixXd dembedded = Eigen::MatrixXd::Zero(params.subword_dim(), static_cast<Eigen::Index>(padded));
    // max pooling routes each channel's gradient to its winning window
    Eigen::MatrixXd dconv_pre = Eigen::MatrixXd::Zero(params.conv_dim(), static_cast<Eigen::Index>(windows));
    for (int j = 0; j < params.conv_dim(); ++j) {
        int p = cache.argmax[j];
        double val = cache.conv_out(j, p);
        dconv_pre(j, p) += dpooled[j] * (1.0 - val * val);
    }
    Eigen::VectorXd window_vec(3 * params.subword_dim());
    for (size_t p = 0; p < windows; ++p) {
        Eigen::VectorXd dcol = dconv_pre.col(static_cast<Eigen::Index>(p));
        if (dcol.isZero(0.0)) continue;
        for (int w = 0; w < kWindow; ++w) {
            window_vec.segment(w * params.subword_dim(), params.subword_dim()) =
                cache.embedded.col(static_cast<Eigen::Index>(p + w));
        }
        grads.conv += dcol * window_vec.transpose();
        Eigen::VectorXd dwindow = params.conv.transpose() * dcol;
        for (int w = 0; w < kWindow; ++w) {
            dembedded.col(static_cast<Eigen::Index>(p + w)) +=
                dwindow.segment(w * params.subword_dim(), params.subword_dim());
        }
    }
    for (size_t i = 0; i < cache.real_len; ++i) {
        Eigen::VectorXd de = dembedded.col(static_cast<Eigen::Index>(i));
        if (de.isZero(0.0)) continue;
        for (const auto& [bucket, count] : cache.trigrams[i].counts) {
            auto [it, inserted] = grads.trigram_rows.try_emplace(bucket, Eigen::VectorXd::Zero(params.subword_dim()));
            it->second += count * de;
        }
    }
}

// d cos(u, v) / du with both norms cached by the caller.
Eigen::VectorXd dcos_du(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double cos_uv) {
    double nu = u.norm();
    double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return Eigen::VectorXd::Zero(u.size());
    return v / (nu * nv) - cos_uv * u / (nu * nu);
}

}  // namespace

CdssmParams init_cdssm(const CdssmConfig& config) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(-0.08, 0.08);
    CdssmParams params;
    auto fill = [&](Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    };
    fill(params.trigram_embedding, config.trigram_dims, config.subword_dim);
    fill(params.conv, config.conv_dim, 3 * config.subword_dim);
    fill(params.output, config.output_dim, config.conv_dim);
    return params;
}

Eigen::VectorXd subword_encode(const std::vector<std::string>& tokens, const CdssmParams& params) {
    return encode_cached(tokens, params).out;
}

CdssmTrainResult train_subword_encoder(const std::vector<std::pair<std::string, std::string>>& pairs,
                                       const CdssmConfig& config) {
    if (pairs.empty()) fail(ErrorKind::InvalidArgument, "cdssm training needs at least one pair");
    if (config.epochs < 1) fail(ErrorKind::InvalidArgument, "cdssm epochs must be >= 1");

    std::vector<std::vector<std::string>> lhs, rhs;
    lhs.reserve(pairs.size());
    rhs.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        lhs.push_back(tokenize(a));
        rhs.push_back(tokenize(b));
    }

    CdssmTrainResult result;
    result.params = init_cdssm(config);
    std::mt19937_64 rng(derive_seed(config.seed, "cdssm-train"));

    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        size_t examples = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<size_t> batch(order.begin() + start, order.begin() + end);
            CdssmGrads grads(result.params);
            size_t used = 0;
            for (size_t bi = 0; bi < batch.size(); ++bi) {
                // candidates: the positive plus negatives drawn from the batch
                std::vector<size_t> cands = {batch[bi]};
                if (batch.size() > 1) {
                    int want = std::min<int>(config.negatives_per_positive, static_cast<int>(batch.size()) - 1);
                    std::uniform_int_distribution<size_t> pick(0, batch.size() - 1);
                    while (static_cast<int>(cands.size()) - 1 < want) {
                        size_t j = pick(rng);
                        if (j != bi) cands.push_back(batch[j]);
                    }
                }
                if (lhs[batch[bi]].empty() || rhs[batch[bi]].empty()) continue;

                EncodeCache a = encode_cached(lhs[batch[bi]], result.params);
                std::vector<EncodeCache> b_caches;
                std::vector<double> cos_vals;
                b_caches.reserve(cands.size());
                for (size_t c : cands) {
                    b_caches.push_back(encode_cached(rhs[c], result.params));
                    double na = a.out.norm(), nb = b_caches.back().out.norm();
                    cos_vals.push_back(na == 0.0 || nb == 0.0 ? 0.0
                                                              : a.out.dot(b_caches.back().out) / (na * nb));
                }
                // softmax over scaled cosines, positive is candidate 0
                double max_s = -1e300;
                for (double c : cos_vals) max_s = std::max(max_s, config.softmax_scale * c);
                double denom = 0.0;
                std::vector<double> ex(cands.size());
                for (size_t c = 0; c < cands.size(); ++c) {
                    ex[c] = std::exp(config.softmax_scale * cos_vals[c] - max_s);
                    denom += ex[c];
                }
                double loss = -(config.softmax_scale * cos_vals[0] - max_s - std::log(denom));
                epoch_loss += loss;
                ++examples;
                ++used;

                Eigen::VectorXd da = Eigen::VectorXd::Zero(result.params.output_dim());
                for (size_t c = 0; c < cands.size(); ++c) {
                    double p = ex[c] / denom;
                    double dcos = config.softmax_scale * (p - (c == 0 ? 1.0 : 0.0));
                    da += dcos * dcos_du(a.out, b_caches[c].out, cos_vals[c]);
                    Eigen::VectorXd db = dcos * dcos_du(b_caches[c].out, a.out, cos_vals[c]);
                    backward(b_caches[c], db, result.params, grads);
                }
                backward(a, da, result.params, grads);
            }
            if (used == 0) continue;
            double scale = config.learning_rate / static_cast<double>(used);
            result.params.conv -= scale * grads.conv;
            result.params.output -= scale * grads.output;
            for (const auto& [bucket, row] : grads.trigram_rows) {
                result.params.trigram_embedding.row(bucket) -= scale * row.transpose();
            }
        }
        result.epoch_loss.push_back(examples == 0 ? 0.0 : epoch_loss / static_cast<double>(examples));
    }
    return result;
}

std::vector<std::pair<std::string, std::string>> load_paraphrase_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open paraphrase pairs file: " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected `text<TAB>paraphrase`");
        }
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return pairs;
}

void CdssmParams::save(const std::string& path) const {
    BinaryWriter w(path, "TBRTCDSSM1");
    w.write_u64(trigram_dims());
    w.write_u64(static_cast<uint64_t>(subword_dim()));
    w.write_u64(static_cast<uint64_t>(conv_dim()));
    w.write_u64(static_cast<uint64_t>(output_dim()));
    w.write_matrix(trigram_embedding);
    w.write_matrix(conv);
    w.write_matrix(output);
}

CdssmParams CdssmParams::load(const std::string& path) {
    BinaryReader r(path, "TBRTCDSSM1");
    uint64_t dims = r.read_u64();
    uint64_t sub = r.read_u64();
    uint64_t conv_dim = r.read_u64();
    uint64_t out_dim = r.read_u64();
    CdssmParams params;
    params.trigram_embedding = r.read_matrix(dims, sub);
    params.conv = r.read_matrix(conv_dim, 3 * sub);
    params.output = r.read_matrix(out_dim, conv_dim);
    return params;
}

}  // namespace tabret
