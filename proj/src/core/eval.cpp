#include "core/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/common.hpp"

namespace tabret {

namespace {

bool top1_relevant(const RankedResult& result) {
    if (result.candidates.empty()) return false;
    const std::string& top = result.candidates.front().table_id;
    return std::find(result.relevant_ids.begin(), result.relevant_ids.end(), top) !=
           result.relevant_ids.end();
}

}  // namespace

double average_precision(const RankedResult& result) {
    if (result.relevant_ids.empty()) {
        fail(ErrorKind::InvalidArgument, "average_precision: query " + result.query_id + " has no relevant ids");
    }
    std::set<std::string> relevant(result.relevant_ids.begin(), result.relevant_ids.end());
    double sum = 0.0;
    size_t hits = 0;
    for (size_t rank = 0; rank < result.candidates.size(); ++rank) {
        if (relevant.count(result.candidates[rank].table_id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

EvalReport evaluate(const std::vector<RankedResult>& results, bool filter) {
    EvalReport report;
    double ap_sum = 0.0;
    size_t first_hits = 0;
    for (const auto& result : results) {
        if (filter) {
            bool single_candidate = result.candidates.size() == 1;
            std::set<std::string> relevant(result.relevant_ids.begin(), result.relevant_ids.end());
            bool any_relevant_retrieved = false;
            for (const auto& cand : result.candidates) {
                if (relevant.count(cand.table_id)) {
                    any_relevant_retrieved = true;
                    break;
                }
            }
            if (single_candidate || !any_relevant_retrieved) {
                ++report.num_filtered;
                continue;
            }
        }
        ap_sum += average_precision(result);
        if (top1_relevant(result)) ++first_hits;
        ++report.num_evaluated;
    }
    if (report.num_evaluated > 0) {
        report.metrics_defined = true;
        report.map = ap_sum / static_cast<double>(report.num_evaluated);
        report.p_at_1 = static_cast<double>(first_hits) / static_cast<double>(report.num_evaluated);
    }
    return report;
}

double candidate_recall(const Bm25Index& index, const std::vector<Query>& queries, size_t k) {
    if (k == 0) fail(ErrorKind::InvalidArgument, "candidate_recall: k must be >= 1");
    size_t labeled = 0;
    size_t recalled = 0;
    for (const auto& query : queries) {
        if (query.relevant_table_ids.empty()) continue;
        ++labeled;
        std::vector<ScoredTable> top = index.retrieve_topk(query.tokens, k);
        std::set<std::string> relevant(query.relevant_table_ids.begin(), query.relevant_table_ids.end());
        for (const auto& cand : top) {
            if (relevant.count(cand.table_id)) {
                ++recalled;
                break;
            }
        }
    }
    if (labeled == 0) fail(ErrorKind::InvalidArgument, "candidate_recall: no labeled queries");
    return static_cast<double>(recalled) / static_cast<double>(labeled);
}

std::vector<PrPoint> pr_curve(const std::vector<RankedResult>& results,
                              const std::vector<double>& thresholds) {
    for (size_t i = 1; i < thresholds.size(); ++i) {
        if (thresholds[i] < thresholds[i - 1]) {
            fail(ErrorKind::InvalidArgument, "pr_curve: thresholds must be ascending");
        }
    }
    std::vector<PrPoint> points;
    points.reserve(thresholds.size());
    size_t total = results.size();
    for (double tau : thresholds) {
        size_t answered = 0, correct = 0;
        for (const auto& result : results) {
            if (result.candidates.empty() || result.candidates.front().score <= tau) continue;
            ++answered;
            if (top1_relevant(result)) ++correct;
        }
        PrPoint point;
        point.threshold = tau;
        point.recall = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
        if (answered > 0) {
            point.precision_defined = true;
            point.precision = static_cast<double>(correct) / static_cast<double>(answered);
        }
        points.push_back(point);
    }
    return points;
}

std::vector<double> default_threshold_grid(const std::vector<RankedResult>& results, size_t steps) {
    double lo = 0.0, hi = 0.0;
    bool seen = false;
    for (const auto& r : results) {
        if (r.candidates.empty()) continue;
        double top = r.candidates.front().score;
        if (!seen) {
            lo = hi = top;
            seen = true;
        } else {
            lo = std::min(lo, top);
            hi = std::max(hi, top);
        }
    }
    std::vector<double> grid;
    if (!seen) return grid;
    double span = std::max(hi - lo, 1e-9);
    double start = lo - 0.05 * span - 1e-9;
    for (size_t i = 0; i <= steps; ++i) {
        grid.push_back(start + (hi - start) * static_cast<double>(i) / static_cast<double>(steps));
    }
    return grid;
}

std::vector<LengthBucket> length_bucket_report(const std::vector<RankedResult>& results,
                                               size_t min_count) {
    std::map<size_t, std::pair<size_t, size_t>> by_length;  // length -> (count, hits)
    for (const auto& result : results) {
        auto& [count, hits] = by_length[result.query_length];
        ++count;
        if (top1_relevant(result)) ++hits;
    }
    std::vector<LengthBucket> buckets;
    size_t tail_count = 0, tail_hits = 0;
    for (const auto& [length, stats] : by_length) {
        if (stats.first < min_count) {
            tail_count += stats.first;
            tail_hits += stats.second;
        } else {
            buckets.push_back({static_cast<int>(length), stats.first,
                               static_cast<double>(stats.second) / static_cast<double>(stats.first)});
        }
    }
    if (tail_count > 0) {
        buckets.push_back({-1, tail_count, static_cast<double>(tail_hits) / static_cast<double>(tail_count)});
    }
    return buckets;
}

DatasetSplit split_dataset(const std::vector<Query>& queries, double train_ratio, double val_ratio,
                           double test_ratio, uint64_t seed) {
    if (train_ratio < 0.0 || val_ratio < 0.0 || test_ratio < 0.0 ||
        std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
        fail(ErrorKind::InvalidArgument, "split ratios must be non-negative and sum to 1");
    }
    std::vector<size_t> order(queries.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(derive_seed(seed, "dataset-split"));
    std::shuffle(order.begin(), order.end(), rng);

    size_t n = queries.size();
    size_t n_val = static_cast<size_t>(val_ratio * static_cast<double>(n));
    size_t n_test = static_cast<size_t>(test_ratio * static_cast<double>(n));
    size_t n_train = n - n_val - n_test;  // floor(train) plus any remainder

    DatasetSplit split;
    for (size_t i = 0; i < n; ++i) {
        const Query& q = queries[order[i]];
        if (i < n_train) {
            split.train.push_back(q);
        } else if (i < n_train + n_val) {
            split.validation.push_back(q);
        } else {
            split.test.push_back(q);
        }
    }
    return split;
}

namespace {

nlohmann::json report_to_json(const EvalReport& report, const std::string& setting_label) {
    nlohmann::json j;
    j["setting"] = setting_label;
    j["metrics_defined"] = report.metrics_defined;
    if (report.metrics_defined) {
        j["map"] = report.map;
        j["p_at_1"] = report.p_at_1;
    }
    j["num_queries_evaluated"] = report.num_evaluated;
    j["num_queries_filtered"] = report.num_filtered;
    return j;
}

}  // namespace

void write_report_json(const EvalReport& report, const std::string& setting_label,
                       const EvalReport* bm25_baseline, const std::string& path) {
    nlohmann::json j = report_to_json(report, setting_label);
    if (bm25_baseline) j["bm25_baseline"] = report_to_json(*bm25_baseline, "BM25");
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write report: " + path);
    out << j.dump(2) << "\n";
}

void write_report_text(const EvalReport& report, const std::string& setting_label,
                       const EvalReport* bm25_baseline, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write report: " + path);
    out.precision(4);
    out << std::fixed;
    out << "setting              MAP     P@1     evaluated  filtered\n";
    auto row = [&out](const std::string& label, const EvalReport& r) {
        out << label;
        for (size_t i = label.size(); i < 21; ++i) out << ' ';
        if (r.metrics_defined) {
            out << r.map << "  " << r.p_at_1;
        } else {
            out << "undef   undef ";
        }
        out << "  " << r.num_evaluated << "          " << r.num_filtered << "\n";
    };
    if (bm25_baseline) row("BM25", *bm25_baseline);
    row(setting_label, report);
}

void write_pr_csv(const std::vector<PrPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write PR curve: " + path);
    out.precision(17);
    out << "threshold,precision,recall\n";
    for (const auto& p : points) {
        out << p.threshold << ",";
        if (p.precision_defined) {
            out << p.precision;
        } else {
            out << "undefined";
        }
        out << "," << p.recall << "\n";
    }
}

void write_length_buckets_csv(const std::vector<LengthBucket>& buckets, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write length buckets: " + path);
    out.precision(17);
    out << "query_length,count,p_at_1\n";
    for (const auto& b : buckets) {
        if (b.length < 0) {
            out << "tail";
        } else {
            out << b.length;
        }
        out << "," << b.count << "," << b.p_at_1 << "\n";
    }
}

void write_ranked_results(const std::vector<RankedResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write ranked results: " + path);
    out.precision(17);
    for (const auto& result : results) {
        nlohmann::json j;
        j["query_id"] = result.query_id;
        j["query_length"] = result.query_length;
        j["relevant_table_ids"] = result.relevant_ids;
        nlohmann::json cands = nlohmann::json::array();
        for (const auto& cand : result.candidates) {
            cands.push_back({{"table_id", cand.table_id}, {"score", cand.score}});
        }
        j["candidates"] = cands;
        out << j.dump() << "\n";
    }
}

std::vector<RankedResult> load_ranked_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open ranked results: " + path);
    std::vector<RankedResult> results;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": malformed ranked result");
        }
        RankedResult result;
        result.query_id = j.value("query_id", "");
        result.query_length = j.value("query_length", size_t{0});
        for (const auto& rid : j["relevant_table_ids"]) result.relevant_ids.push_back(rid.get<std::string>());
        for (const auto& cand : j["candidates"]) {
            result.candidates.push_back({cand["table_id"].get<std::string>(), cand["score"].get<double>()});
        }
        results.push_back(std::move(result));
    }
    return results;
}

}  // namespace tabret
