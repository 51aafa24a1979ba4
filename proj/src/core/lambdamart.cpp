#include "core/lambdamart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "core/common.hpp"

namespace tabret {

namespace {

// Ranked order of a candidate list: score descending, table id ascending.
std::vector<size_t> ranked_order(const std::vector<double>& scores,
                                 const std::vector<std::string>& table_ids) {
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return table_ids[a] < table_ids[b];
    });
    return order;
}

struct LambdaStats {
    std::vector<double> lambdas;
    std::vector<double> curvature;  // logistic second-order weights for Newton leaves
};

LambdaStats compute_lambda_stats(const std::vector<double>& scores, const std::vector<int>& labels,
                                 const std::vector<std::string>& table_ids) {
    size_t n = scores.size();
    LambdaStats stats;
    stats.lambdas.assign(n, 0.0);
    stats.curvature.assign(n, 0.0);

    size_t total_relevant = 0;
    for (int l : labels) total_relevant += l == 1 ? 1 : 0;
    if (total_relevant == 0 || total_relevant == n) return stats;  // degenerate list

    std::vector<size_t> order = ranked_order(scores, table_ids);
    std::vector<int> ranked_labels(n);
    std::vector<size_t> position(n);
    for (size_t rank = 0; rank < n; ++rank) {
        ranked_labels[rank] = labels[order[rank]];
        position[order[rank]] = rank;
    }
    double base_ap = average_precision_of_ranking(ranked_labels, total_relevant);

    for (size_t p = 0; p < n; ++p) {
        if (labels[p] != 1) continue;
        for (size_t q = 0; q < n; ++q) {
            if (labels[q] == 1) continue;
            // delta MAP is re-evaluated exactly by swapping the two slots
            std::swap(ranked_labels[position[p]], ranked_labels[position[q]]);
            double swapped_ap = average_precision_of_ranking(ranked_labels, total_relevant);
            std::swap(ranked_labels[position[p]], ranked_labels[position[q]]);

            double delta = std::abs(swapped_ap - base_ap);
            double rho = 1.0 / (1.0 + std::exp(scores[p] - scores[q]));
            stats.lambdas[p] += delta * rho;
            stats.lambdas[q] -= delta * rho;
            double w = delta * rho * (1.0 - rho);
            stats.curvature[p] += w;
            stats.curvature[q] += w;
        }
    }
    return stats;
}

struct NodeData {
    std::vector<size_t> instances;  // indices into the flat training arrays
    int node_index = -1;
};

struct SplitChoice {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::vector<size_t> left, right;
};

SplitChoice find_best_split(const NodeData& node, const std::vector<std::vector<double>>& features,
                            const std::vector<double>& targets, int min_per_leaf) {
    SplitChoice best;
    size_t n = node.instances.size();
    if (n < static_cast<size_t>(2 * min_per_leaf)) return best;

    double total = 0.0;
    for (size_t idx : node.instances) total += targets[idx];
    double parent_score = total * total / static_cast<double>(n);

    size_t num_features = features[node.instances[0]].size();
    std::vector<std::pair<double, size_t>> order(n);
    for (size_t f = 0; f < num_features; ++f) {
        for (size_t i = 0; i < n; ++i) {
            order[i] = {features[node.instances[i]][f], node.instances[i]};
        }
        std::sort(order.begin(), order.end());
        double left_sum = 0.0;
        for (size_t k = 1; k < n; ++k) {
            left_sum += targets[order[k - 1].second];
            if (order[k - 1].first == order[k].first) continue;  // no boundary here
            if (k < static_cast<size_t>(min_per_leaf) || n - k < static_cast<size_t>(min_per_leaf)) continue;
            double right_sum = total - left_sum;
            double gain = left_sum * left_sum / static_cast<double>(k) +
                          right_sum * right_sum / static_cast<double>(n - k) - parent_score;
            if (gain > best.gain + 1e-12) {
                best.valid = true;
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = 0.5 * (order[k - 1].first + order[k].first);
            }
        }
    }
    if (best.valid) {
        for (size_t idx : node.instances) {
            (features[idx][best.feature] <= best.threshold ? best.left : best.right).push_back(idx);
        }
    }
    return best;
}

RegressionTree fit_tree(const std::vector<std::vector<double>>& features,
                        const std::vector<double>& targets, const std::vector<double>& curvature,
                        const LambdaMartConfig& config) {
    RegressionTree tree;
    tree.nodes.push_back(TreeNode{});

    NodeData root;
    root.instances.resize(features.size());
    std::iota(root.instances.begin(), root.instances.end(), 0);
    root.node_index = 0;

    struct Pending {
        NodeData data;
        SplitChoice split;
    };
    std::vector<Pending> frontier;
    frontier.push_back({std::move(root), SplitChoice{}});
    frontier.back().split = find_best_split(frontier.back().data, features, targets,
                                            config.min_instances_per_leaf);

    int leaves = 1;
    while (leaves < config.max_leaves) {
        // best-first: split the frontier node with the largest gain
        int best_i = -1;
        for (size_t i = 0; i < frontier.size(); ++i) {
            if (!frontier[i].split.valid) continue;
            if (best_i < 0 || frontier[i].split.gain > frontier[best_i].split.gain) {
                best_i = static_cast<int>(i);
            }
        }
        if (best_i < 0) break;

        Pending chosen = std::move(frontier[best_i]);
        frontier.erase(frontier.begin() + best_i);

        int left_index = static_cast<int>(tree.nodes.size());
        int right_index = left_index + 1;
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        TreeNode& node = tree.nodes[chosen.data.node_index];
        node.is_leaf = false;
        node.feature = chosen.split.feature;
        node.threshold = chosen.split.threshold;
        node.left = left_index;
        node.right = right_index;

        NodeData left{std::move(chosen.split.left), left_index};
        NodeData right{std::move(chosen.split.right), right_index};
        for (NodeData* child : {&left, &right}) {
            Pending p{std::move(*child), SplitChoice{}};
            p.split = find_best_split(p.data, features, targets, config.min_instances_per_leaf);
            frontier.push_back(std::move(p));
        }
        ++leaves;
    }

    // Newton leaf values: sum(lambda) / sum(curvature), zero when the node
    // carries no pairwise pressure.
    for (const Pending& p : frontier) {
        double lambda_sum = 0.0, curve_sum = 0.0;
        for (size_t idx : p.data.instances) {
            lambda_sum += targets[idx];
            curve_sum += curvature[idx];
        }
        tree.nodes[p.data.node_index].value = curve_sum > 1e-12 ? lambda_sum / curve_sum : 0.0;
    }
    return tree;
}

}  // namespace

double RegressionTree::evaluate(const std::vector<double>& features) const {
    int node = 0;
    while (!nodes[node].is_leaf) {
        node = features[nodes[node].feature] <= nodes[node].threshold ? nodes[node].left
                                                                      : nodes[node].right;
    }
    return nodes[node].value;
}

double Forest::score(const std::vector<double>& features) const {
    if (features.size() != feature_names.size()) {
        fail(ErrorKind::InvalidArgument,
             "feature vector length " + std::to_string(features.size()) + " does not match schema length " +
                 std::to_string(feature_names.size()));
    }
    double total = 0.0;
    for (size_t i = 0; i < trees.size(); ++i) total += weights[i] * trees[i].evaluate(features);
    return total;
}

double average_precision_of_ranking(const std::vector<int>& ranked_labels, size_t total_relevant) {
    if (total_relevant == 0) fail(ErrorKind::InvalidArgument, "average precision needs >= 1 relevant item");
    double sum = 0.0;
    size_t hits = 0;
    for (size_t rank = 0; rank < ranked_labels.size(); ++rank) {
        if (ranked_labels[rank] == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

std::vector<double> compute_lambdas(const std::vector<double>& scores, const std::vector<int>& labels,
                                    const std::vector<std::string>& table_ids) {
    if (scores.size() != labels.size() || scores.size() != table_ids.size()) {
        fail(ErrorKind::InvalidArgument, "compute_lambdas: mismatched input lengths");
    }
    return compute_lambda_stats(scores, labels, table_ids).lambdas;
}

double mean_average_precision(const std::vector<QueryGroup>& groups,
                              const std::vector<std::vector<double>>& scores) {
    double sum = 0.0;
    size_t counted = 0;
    for (size_t g = 0; g < groups.size(); ++g) {
        const QueryGroup& group = groups[g];
        size_t relevant = 0;
        for (const auto& inst : group.instances) relevant += inst.label == 1 ? 1 : 0;
        if (relevant == 0) continue;
        std::vector<std::string> ids;
        ids.reserve(group.instances.size());
        for (const auto& inst : group.instances) ids.push_back(inst.table_id);
        std::vector<size_t> order = ranked_order(scores[g], ids);
        std::vector<int> ranked_labels;
        ranked_labels.reserve(order.size());
        for (size_t idx : order) ranked_labels.push_back(group.instances[idx].label);
        sum += average_precision_of_ranking(ranked_labels, relevant);
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

LambdaMartResult fit_lambdamart(const std::vector<QueryGroup>& groups,
                                const std::vector<std::string>& feature_names,
                                const LambdaMartConfig& config) {
    if (config.num_trees < 0) fail(ErrorKind::InvalidArgument, "num_trees must be >= 0");
    if (config.max_leaves < 1) fail(ErrorKind::InvalidArgument, "max_leaves must be >= 1");
    if (config.min_instances_per_leaf < 1) fail(ErrorKind::InvalidArgument, "min_instances_per_leaf must be >= 1");

    bool usable = false;
    for (const auto& group : groups) {
        bool pos = false, neg = false;
        for (const auto& inst : group.instances) (inst.label == 1 ? pos : neg) = true;
        if (pos && neg) usable = true;
        for (const auto& inst : group.instances) {
            if (inst.features.size() != feature_names.size()) {
                fail(ErrorKind::InvalidArgument, "group " + group.query_id +
                                                     ": feature vector does not match schema length");
            }
        }
    }
    if (!usable) fail(ErrorKind::InvalidArgument, "training set has no query group with mixed labels");

    // flat views over all instances
    std::vector<std::vector<double>> features;
    std::vector<std::pair<size_t, size_t>> owner;  // (group, offset)
    for (size_t g = 0; g < groups.size(); ++g) {
        for (size_t i = 0; i < groups[g].instances.size(); ++i) {
            features.push_back(groups[g].instances[i].features);
            owner.emplace_back(g, i);
        }
    }

    LambdaMartResult result;
    result.forest.feature_names = feature_names;
    std::vector<std::vector<double>> scores(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) scores[g].assign(groups[g].instances.size(), 0.0);

    std::vector<double> targets(features.size(), 0.0);
    std::vector<double> curvature(features.size(), 0.0);

    for (int round = 0; round < config.num_trees; ++round) {
        size_t offset = 0;
        for (size_t g = 0; g < groups.size(); ++g) {
            std::vector<int> labels;
            std::vector<std::string> ids;
            labels.reserve(groups[g].instances.size());
            ids.reserve(groups[g].instances.size());
            for (const auto& inst : groups[g].instances) {
                labels.push_back(inst.label);
                ids.push_back(inst.table_id);
            }
            LambdaStats stats = compute_lambda_stats(scores[g], labels, ids);
            for (size_t i = 0; i < stats.lambdas.size(); ++i) {
                targets[offset + i] = stats.lambdas[i];
                curvature[offset + i] = stats.curvature[i];
            }
            offset += stats.lambdas.size();
        }

        RegressionTree tree = fit_tree(features, targets, curvature, config);
        for (size_t i = 0; i < features.size(); ++i) {
            scores[owner[i].first][owner[i].second] += config.learning_rate * tree.evaluate(features[i]);
        }
        result.forest.trees.push_back(std::move(tree));
        result.forest.weights.push_back(config.learning_rate);
        result.train_map_trace.push_back(mean_average_precision(groups, scores));
    }
    return result;
}

std::vector<RankedCandidate> rank_candidates(const Forest& forest,
                                             const std::vector<RankInstance>& candidates) {
    std::vector<RankedCandidate> ranked;
    ranked.reserve(candidates.size());
    for (const auto& cand : candidates) ranked.push_back({cand.table_id, forest.score(cand.features)});
    std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.table_id < b.table_id;
    });
    return ranked;
}

void Forest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write forest file: " + path);
    out.precision(17);
    out << "tabret-forest v1\n";
    out << "features " << feature_names.size();
    for (const auto& name : feature_names) out << " " << name;
    out << "\n";
    out << "trees " << trees.size() << "\n";
    for (size_t t = 0; t < trees.size(); ++t) {
        out << "tree " << t << " weight " << weights[t] << " nodes " << trees[t].nodes.size() << "\n";
        for (size_t n = 0; n < trees[t].nodes.size(); ++n) {
            const TreeNode& node = trees[t].nodes[n];
            if (node.is_leaf) {
                out << n << " leaf " << node.value << "\n";
            } else {
                out << n << " split " << feature_names[node.feature] << " " << node.threshold << " "
                    << node.left << " " << node.right << "\n";
            }
        }
    }
}

Forest Forest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open forest file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "tabret-forest v1") {
        fail(ErrorKind::Parse, "not a tabret-forest v1 file: " + path);
    }
    Forest forest;
    std::string key;
    size_t count = 0;
    {
        std::getline(in, line);
        std::istringstream ss(line);
        ss >> key >> count;
        if (key != "features") fail(ErrorKind::Parse, "forest file missing features line");
        for (size_t i = 0; i < count; ++i) {
            std::string name;
            if (!(ss >> name)) fail(ErrorKind::Parse, "forest file: truncated schema");
            forest.feature_names.push_back(name);
        }
    }
    size_t num_trees = 0;
    {
        std::getline(in, line);
        std::istringstream ss(line);
        ss >> key >> num_trees;
        if (key != "trees") fail(ErrorKind::Parse, "forest file missing trees line");
    }
    for (size_t t = 0; t < num_trees; ++t) {
        std::getline(in, line);
        std::istringstream ss(line);
        size_t index = 0, num_nodes = 0;
        double weight = 0.0;
        std::string kw1, kw2, kw3;
        ss >> kw1 >> index >> kw2 >> weight >> kw3 >> num_nodes;
        if (kw1 != "tree" || kw2 != "weight" || kw3 != "nodes") {
            fail(ErrorKind::Parse, "forest file: bad tree header: " + line);
        }
        RegressionTree tree;
        tree.nodes.resize(num_nodes);
        for (size_t n = 0; n < num_nodes; ++n) {
            if (!std::getline(in, line)) fail(ErrorKind::Parse, "forest file: truncated tree");
            std::istringstream ns(line);
            size_t id = 0;
            std::string kind;
            ns >> id >> kind;
            if (id >= num_nodes) fail(ErrorKind::Parse, "forest file: node id out of range");
            if (kind == "leaf") {
                tree.nodes[id].is_leaf = true;
                ns >> tree.nodes[id].value;
            } else if (kind == "split") {
                std::string feature_name;
                ns >> feature_name >> tree.nodes[id].threshold >> tree.nodes[id].left >> tree.nodes[id].right;
                auto it = std::find(forest.feature_names.begin(), forest.feature_names.end(), feature_name);
                if (it == forest.feature_names.end()) {
                    fail(ErrorKind::Parse, "forest file: unknown feature '" + feature_name + "'");
                }
                tree.nodes[id].is_leaf = false;
                tree.nodes[id].feature = static_cast<int>(it - forest.feature_names.begin());
            } else {
                fail(ErrorKind::Parse, "forest file: bad node line: " + line);
            }
        }
        forest.trees.push_back(std::move(tree));
        forest.weights.push_back(weight);
    }
    return forest;
}

}  // namespace tabret
