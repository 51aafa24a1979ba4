#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "core/common.hpp"
#include "core/lambdamart.hpp"
#include "test_util.hpp"

using namespace tabret;

namespace {

// AP oracle over (score, label) pairs using the same tie rule.
double ap_oracle(std::vector<double> scores, std::vector<int> labels, std::vector<std::string> ids) {
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids[a] < ids[b];
    });
    size_t total_relevant = 0;
    for (int l : labels) total_relevant += l;
    double sum = 0.0;
    size_t hits = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

std::vector<QueryGroup> separable_groups(size_t count, uint64_t seed) {
    // one informative feature (index 0), four noise features
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pos(0.6, 1.0), neg(0.0, 0.4), noise(0.0, 1.0);
    std::uniform_int_distribution<int> cands(4, 8);
    std::vector<QueryGroup> groups;
    for (size_t g = 0; g < count; ++g) {
        QueryGroup group;
        group.query_id = "q" + std::to_string(g);
        int n = cands(rng);
        int pos_at = static_cast<int>(g % n);
        for (int i = 0; i < n; ++i) {
            RankInstance inst;
            inst.table_id = "t" + std::to_string(g) + "_" + std::to_string(i);
            inst.label = i == pos_at ? 1 : 0;
            inst.features.push_back(inst.label ? pos(rng) : neg(rng));
            for (int f = 0; f < 4; ++f) inst.features.push_back(noise(rng));
            group.instances.push_back(std::move(inst));
        }
        groups.push_back(std::move(group));
    }
    return groups;
}

const std::vector<std::string> kSchema = {"f0", "f1", "f2", "f3", "f4"};

}  // namespace

TEST_CASE("forest score basics") {
    Forest empty;
    empty.feature_names = {"a", "b"};
    CHECK(empty.score({1.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(empty.score({1.0}), Error);

    Forest single;
    single.feature_names = {"a", "b"};
    RegressionTree leaf;
    leaf.nodes.push_back(TreeNode{true, -1, 0.0, -1, -1, 3.5});
    single.trees.push_back(leaf);
    single.weights.push_back(0.1);
    CHECK(single.score({0.0, 0.0}) == doctest::Approx(0.35));
}

TEST_CASE("two-tree forest hand trace") {
    // tree 0: split on feature 0 at 0.5 -> leaves 1.0 / 2.0, weight 0.1
    // tree 1: split on feature 1 at 0.0 -> leaves -1.0 / 4.0, weight 0.5
    Forest forest;
    forest.feature_names = {"a", "b"};
    {
        RegressionTree t;
        t.nodes.resize(3);
        t.nodes[0] = TreeNode{false, 0, 0.5, 1, 2, 0.0};
        t.nodes[1] = TreeNode{true, -1, 0.0, -1, -1, 1.0};
        t.nodes[2] = TreeNode{true, -1, 0.0, -1, -1, 2.0};
        forest.trees.push_back(t);
        forest.weights.push_back(0.1);
    }
    {
        RegressionTree t;
        t.nodes.resize(3);
        t.nodes[0] = TreeNode{false, 1, 0.0, 1, 2, 0.0};
        t.nodes[1] = TreeNode{true, -1, 0.0, -1, -1, -1.0};
        t.nodes[2] = TreeNode{true, -1, 0.0, -1, -1, 4.0};
        forest.trees.push_back(t);
        forest.weights.push_back(0.5);
    }
    // x = (0.3, 0.2): left leaf 1.0, right leaf 4.0 -> 0.1*1 + 0.5*4 = 2.1
    CHECK(forest.score({0.3, 0.2}) == doctest::Approx(2.1));
    // x = (0.9, -1.0): 0.1*2 + 0.5*(-1) = -0.3
    CHECK(forest.score({0.9, -1.0}) == doctest::Approx(-0.3));
}

TEST_CASE("compute_lambdas zero cases") {
    CHECK(compute_lambdas({1.0, 2.0}, {1, 1}, {"a", "b"}) == std::vector<double>{0.0, 0.0});
    CHECK(compute_lambdas({1.0, 2.0}, {0, 0}, {"a", "b"}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("compute_lambdas pushes a bottom-ranked positive up") {
    std::vector<double> scores = {3.0, 2.0, 1.0};
    std::vector<int> labels = {0, 0, 1};
    std::vector<std::string> ids = {"a", "b", "c"};
    std::vector<double> lambdas = compute_lambdas(scores, labels, ids);
    CHECK(lambdas[2] > 0.0);
    CHECK(lambdas[0] < 0.0);
    CHECK(lambdas[1] < 0.0);
    // brute-force delta-AP of each swap confirms the size ordering: swapping
    // with the top candidate changes AP more than with the middle one
    double base = ap_oracle(scores, labels, ids);
    double swap_top = ap_oracle(scores, {1, 0, 0}, ids);
    double swap_mid = ap_oracle(scores, {0, 1, 0}, ids);
    CHECK(std::abs(swap_top - base) > std::abs(swap_mid - base));
    CHECK(std::abs(lambdas[0]) > std::abs(lambdas[1]));
}

TEST_CASE("compute_lambdas sums to zero") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> score(-2.0, 2.0);
    std::bernoulli_distribution label(0.3);
    for (int trial = 0; trial < 50; ++trial) {
        size_t n = 2 + trial % 9;
        std::vector<double> scores;
        std::vector<int> labels;
        std::vector<std::string> ids;
        for (size_t i = 0; i < n; ++i) {
            scores.push_back(score(rng));
            labels.push_back(label(rng) ? 1 : 0);
            ids.push_back("t" + std::to_string(i));
        }
        std::vector<double> lambdas = compute_lambdas(scores, labels, ids);
        double sum = std::accumulate(lambdas.begin(), lambdas.end(), 0.0);
        CHECK(std::abs(sum) < 1e-12);
    }
}

TEST_CASE("compute_lambdas saturates when the positive is far ahead") {
    std::vector<double> lambdas =
        compute_lambdas({20.0, 0.0, -1.0}, {1, 0, 0}, {"a", "b", "c"});
    for (double l : lambdas) CHECK(std::abs(l) < 1e-3);
}

TEST_CASE("fit_lambdamart reaches MAP 1.0 on separable data within 10 trees") {
    std::vector<QueryGroup> groups = separable_groups(30, 77);
    LambdaMartConfig config;
    config.num_trees = 10;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);
    CHECK(result.train_map_trace.back() == doctest::Approx(1.0));
}

TEST_CASE("fit_lambdamart training MAP trend never drops far below its best") {
    std::vector<QueryGroup> groups = separable_groups(40, 5);
    LambdaMartConfig config;
    config.num_trees = 40;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);
    double best = 0.0;
    for (double m : result.train_map_trace) {
        CHECK(m >= best - 0.01);
        best = std::max(best, m);
    }
}

TEST_CASE("fit_lambdamart with zero trees yields the empty forest") {
    std::vector<QueryGroup> groups = separable_groups(5, 3);
    LambdaMartConfig config;
    config.num_trees = 0;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);
    CHECK(result.forest.trees.empty());
    CHECK(result.forest.score(groups[0].instances[0].features) == 0.0);
}

TEST_CASE("fit_lambdamart rejects degenerate training sets") {
    QueryGroup group;
    group.query_id = "q";
    for (int i = 0; i < 3; ++i) {
        group.instances.push_back({"t" + std::to_string(i), {0.1, 0.2, 0.3, 0.4, 0.5}, 1});
    }
    CHECK_THROWS_AS(fit_lambdamart({group}, kSchema, LambdaMartConfig{}), Error);
}

TEST_CASE("fit_lambdamart is byte-identical under a fixed seed and data") {
    std::vector<QueryGroup> groups = separable_groups(12, 9);
    LambdaMartConfig config;
    config.num_trees = 15;
    LambdaMartResult a = fit_lambdamart(groups, kSchema, config);
    LambdaMartResult b = fit_lambdamart(groups, kSchema, config);
    testutil::TempDir dir;
    a.forest.save(dir.file("a.txt"));
    b.forest.save(dir.file("b.txt"));
    CHECK(testutil::slurp(dir.file("a.txt")) == testutil::slurp(dir.file("b.txt")));
}

TEST_CASE("scores are piecewise constant between thresholds") {
    std::vector<QueryGroup> groups = separable_groups(20, 13);
    LambdaMartConfig config;
    config.num_trees = 12;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);

    // collect all thresholds on feature 0
    std::vector<double> thresholds;
    for (const auto& tree : result.forest.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf && node.feature == 0) thresholds.push_back(node.threshold);
    REQUIRE(!thresholds.empty());

    std::vector<double> x = groups[0].instances[0].features;
    double base = result.forest.score(x);
    // moving by less than the distance to the nearest threshold cannot cross
    double nearest = 1e9;
    for (double t : thresholds) nearest = std::min(nearest, std::abs(t - x[0]));
    if (nearest > 1e-12) {
        std::vector<double> nudged = x;
        nudged[0] = x[0] + nearest / 2.0;
        CHECK(result.forest.score(nudged) == doctest::Approx(base));
        nudged[0] = x[0] - nearest / 2.0;
        CHECK(result.forest.score(nudged) == doctest::Approx(base));
    }
}

TEST_CASE("rank_candidates is an ordered permutation with the id tie rule") {
    Forest forest;
    forest.feature_names = {"f"};
    RegressionTree t;
    t.nodes.push_back(TreeNode{false, 0, 0.5, 1, 2, 0.0});
    t.nodes.push_back(TreeNode{true, -1, 0.0, -1, -1, 0.0});
    t.nodes.push_back(TreeNode{true, -1, 0.0, -1, -1, 1.0});
    forest.trees.push_back(t);
    forest.weights.push_back(1.0);

    std::vector<RankInstance> candidates = {
        {"tb", {0.4}, 0},  // leaf 0
        {"ta", {0.3}, 0},  // leaf 0 (tie with tb -> ta first)
        {"tc", {0.9}, 1},  // leaf 1
    };
    std::vector<RankedCandidate> ranked = rank_candidates(forest, candidates);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].table_id == "tc");
    CHECK(ranked[1].table_id == "ta");
    CHECK(ranked[2].table_id == "tb");

    // single candidate passes through
    std::vector<RankedCandidate> one = rank_candidates(forest, {{"x", {0.1}, 0}});
    REQUIRE(one.size() == 1);
    CHECK(one[0].table_id == "x");
}

TEST_CASE("positive scaling of leaf values preserves the ranking") {
    std::vector<QueryGroup> groups = separable_groups(10, 21);
    LambdaMartConfig config;
    config.num_trees = 8;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);

    // power-of-two scale keeps every float comparison exact
    Forest scaled = result.forest;
    for (auto& tree : scaled.trees)
        for (auto& node : tree.nodes)
            if (node.is_leaf) node.value *= 2.0;

    for (const auto& group : groups) {
        std::vector<RankedCandidate> a = rank_candidates(result.forest, group.instances);
        std::vector<RankedCandidate> b = rank_candidates(scaled, group.instances);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].table_id == b[i].table_id);
    }
}

TEST_CASE("forest save/load round trip preserves scores") {
    std::vector<QueryGroup> groups = separable_groups(8, 2);
    LambdaMartConfig config;
    config.num_trees = 6;
    LambdaMartResult result = fit_lambdamart(groups, kSchema, config);
    testutil::TempDir dir;
    result.forest.save(dir.file("forest.txt"));
    Forest loaded = Forest::load(dir.file("forest.txt"));
    CHECK(loaded.feature_names == result.forest.feature_names);
    for (const auto& group : groups) {
        for (const auto& inst : group.instances) {
            CHECK(loaded.score(inst.features) == doctest::Approx(result.forest.score(inst.features)));
        }
    }
}
