#include <doctest.h>

#include <cmath>
#include <random>

#include "core/cdssm.hpp"
#include "core/common.hpp"
#include "core/embedding.hpp"

using namespace tabret;

namespace {

CdssmConfig tiny_config() {
    CdssmConfig cfg;
    cfg.trigram_dims = 512;
    cfg.subword_dim = 12;
    cfg.conv_dim = 16;
    cfg.output_dim = 10;
    cfg.epochs = 12;
    cfg.learning_rate = 0.25;
    cfg.batch_size = 16;
    cfg.seed = 99;
    return cfg;
}

// Forward oracle re-built from the architecture definition: trigram hashing,
// embedding, width-3 tanh convolution, max pooling, tanh projection.
Eigen::VectorXd encode_oracle(const std::vector<std::string>& tokens, const CdssmParams& p) {
    if (tokens.empty()) return Eigen::VectorXd::Zero(p.output_dim());
    size_t padded = std::max<size_t>(tokens.size(), 3);
    Eigen::MatrixXd embedded = Eigen::MatrixXd::Zero(p.subword_dim(), padded);
    for (size_t i = 0; i < tokens.size(); ++i) {
        TrigramVector tri = token_trigrams(tokens[i], p.trigram_dims());
        for (const auto& [bucket, count] : tri.counts) {
            embedded.col(i) += count * p.trigram_embedding.row(bucket).transpose();
        }
    }
    size_t windows = padded - 2;
    Eigen::MatrixXd conv(p.conv_dim(), windows);
    for (size_t w = 0; w < windows; ++w) {
        Eigen::VectorXd window(3 * p.subword_dim());
        window << embedded.col(w), embedded.col(w + 1), embedded.col(w + 2);
        conv.col(w) = (p.conv * window).array().tanh();
    }
    Eigen::VectorXd pooled = conv.rowwise().maxCoeff();
    return (p.output * pooled).array().tanh();
}

std::vector<std::pair<std::string, std::string>> synthetic_pairs(size_t count, uint64_t seed) {
    // paraphrase pairs that share a distinctive token and swap the filler
    const std::vector<std::string> markers = {"otter", "basalt", "violin", "praline", "glacier",
                                              "mango", "turbine", "falcon", "ember", "cobalt"};
    const std::vector<std::string> fillers = {"list", "group", "set", "table", "roster", "index"};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> m(0, markers.size() - 1);
    std::uniform_int_distribution<size_t> f(0, fillers.size() - 1);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (size_t i = 0; i < count; ++i) {
        std::string marker = markers[m(rng)];
        pairs.emplace_back(fillers[f(rng)] + " of " + marker, marker + " " + fillers[f(rng)]);
    }
    return pairs;
}

}  // namespace

TEST_CASE("subword_encode matches the forward oracle") {
    CdssmConfig cfg = tiny_config();
    CdssmParams params = init_cdssm(cfg);
    for (const auto& tokens : std::vector<std::vector<std::string>>{
             {"cat"}, {"one", "two"}, {"alpha", "beta", "gamma", "delta"}, {}}) {
        Eigen::VectorXd got = subword_encode(tokens, params);
        Eigen::VectorXd want = encode_oracle(tokens, params);
        REQUIRE(got.size() == want.size());
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("subword_encode is deterministic and finite") {
    CdssmParams params = init_cdssm(tiny_config());
    Eigen::VectorXd a = subword_encode({"berlin", "flights"}, params);
    Eigen::VectorXd b = subword_encode({"berlin", "flights"}, params);
    CHECK((a - b).norm() == 0.0);
    CHECK(std::isfinite(a.norm()));
    CHECK(a.norm() > 0.0);
}

TEST_CASE("single-token input uses one padded window") {
    CdssmParams params = init_cdssm(tiny_config());
    // pooling over one window is the window itself; encoding must be finite
    Eigen::VectorXd v = subword_encode({"a"}, params);
    CHECK(std::isfinite(v.norm()));
    CHECK(v.size() == params.output_dim());
}

TEST_CASE("training loss trends down on synthetic paraphrases") {
    auto pairs = synthetic_pairs(100, 5);
    CdssmConfig cfg = tiny_config();
    CdssmTrainResult result = train_subword_encoder(pairs, cfg);
    REQUIRE(result.epoch_loss.size() == static_cast<size_t>(cfg.epochs));
    CHECK(result.epoch_loss.back() < result.epoch_loss.front());
}

TEST_CASE("training is reproducible under a fixed seed") {
    auto pairs = synthetic_pairs(40, 11);
    CdssmConfig cfg = tiny_config();
    cfg.epochs = 3;
    CdssmTrainResult a = train_subword_encoder(pairs, cfg);
    CdssmTrainResult b = train_subword_encoder(pairs, cfg);
    CHECK(a.epoch_loss == b.epoch_loss);
    CHECK((a.params.trigram_embedding - b.params.trigram_embedding).norm() == 0.0);
    CHECK((a.params.conv - b.params.conv).norm() == 0.0);
    CHECK((a.params.output - b.params.output).norm() == 0.0);
}

TEST_CASE("trained encoder separates held-out paraphrases from random pairs") {
    auto train = synthetic_pairs(160, 21);
    CdssmConfig cfg = tiny_config();
    cfg.epochs = 25;
    CdssmTrainResult result = train_subword_encoder(train, cfg);

    auto heldout = synthetic_pairs(50, 901);
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<size_t> pick(0, heldout.size() - 1);
    size_t wins = 0;
    for (size_t i = 0; i < heldout.size(); ++i) {
        Eigen::VectorXd a = subword_encode(tokenize(heldout[i].first), result.params);
        Eigen::VectorXd b = subword_encode(tokenize(heldout[i].second), result.params);
        size_t j = pick(rng);
        while (j == i) j = pick(rng);
        Eigen::VectorXd r = subword_encode(tokenize(heldout[j].second), result.params);
        if (cosine(a, b) > cosine(a, r)) ++wins;
    }
    CHECK(wins >= 40);  // >= 80% of held-out pairs
}

TEST_CASE("training rejects an empty pair list") {
    CHECK_THROWS_AS(train_subword_encoder({}, tiny_config()), Error);
}
