#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tabret {

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;        // split feature index
    double threshold = 0.0;  // value <= threshold goes left
    int left = -1;
    int right = -1;
    double value = 0.0;      // leaf output
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root

    double evaluate(const std::vector<double>& features) const;
};

// Weighted tree ensemble: s(q,t) = sum_i w_i * tr_i(features).
struct Forest {
    std::vector<RegressionTree> trees;
    std::vector<double> weights;
    std::vector<std::string> feature_names;

    double score(const std::vector<double>& features) const;

    // Human-readable dump: schema header, then per tree one line per node.
    void save(const std::string& path) const;
    static Forest load(const std::string& path);
};

struct RankInstance {
    std::string table_id;
    std::vector<double> features;
    int label = 0;  // binary relevance
};

struct QueryGroup {
    std::string query_id;
    std::vector<RankInstance> instances;
};

// Pairwise lambda gradients for one candidate list under the MAP metric:
// for every (positive, negative) pair, lambda = |delta AP of swapping the
// pair in the current ranking| * logistic(score_neg - score_pos), added to
// the positive and subtracted from the negative. Sums to zero; all-equal
// labels produce the zero vector.
std::vector<double> compute_lambdas(const std::vector<double>& scores, const std::vector<int>& labels,
                                    const std::vector<std::string>& table_ids);

struct LambdaMartConfig {
    int num_trees = 100;
    int max_leaves = 16;
    double learning_rate = 0.1;
    int min_instances_per_leaf = 1;
    uint64_t seed = 0;  // reserved; training is deterministic without sampling
};

struct LambdaMartResult {
    Forest forest;
    std::vector<double> train_map_trace;  // MAP after each boosting round
};

// Gradient boosting: per round, lambda gradients and their logistic curvature
// are computed per query group, a least-squares regression tree is grown on
// the lambdas (greedy variance-reduction splits, best-first up to max_leaves),
// and leaf values take the Newton step sum(lambda) / sum(curvature).
LambdaMartResult fit_lambdamart(const std::vector<QueryGroup>& groups,
                                const std::vector<std::string>& feature_names,
                                const LambdaMartConfig& config);

struct RankedCandidate {
    std::string table_id;
    double score = 0.0;
};

// Scores and sorts candidates: descending score, ties by ascending table id.
std::vector<RankedCandidate> rank_candidates(const Forest& forest,
                                             const std::vector<RankInstance>& candidates);

// Average precision of a ranked label sequence given the total number of
// relevant items (missing relevants count in the denominator).
double average_precision_of_ranking(const std::vector<int>& ranked_labels, size_t total_relevant);

// MAP of ranking every group by the given per-instance scores, using the
// rank_candidates tie rule; groups without a positive are skipped.
double mean_average_precision(const std::vector<QueryGroup>& groups,
                              const std::vector<std::vector<double>>& scores);

}  // namespace tabret
