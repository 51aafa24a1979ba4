#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/common.hpp"
#include "core/features.hpp"

using namespace tabret;

namespace {

CorpusStats flat_stats(const std::vector<std::string>& words, size_t num_docs = 2, size_t df = 1) {
    CorpusStats stats;
    stats.num_docs = num_docs;
    for (const auto& w : words) stats.doc_freq[w] = df;
    return stats;
}

// Straight-from-the-definition oracle: per n-gram order, enumerate every
// aspect/query start position pair and normalize by the aspect's n-gram
// count; degenerate orders contribute zero.
double f_pp_oracle(const std::vector<std::string>& aspect, const std::vector<std::string>& query,
                   const PhraseTable& pt, int max_order) {
    double total = 0.0;
    for (int n = 1; n <= max_order; ++n) {
        long aspect_grams = static_cast<long>(aspect.size()) - n + 1;
        long query_grams = static_cast<long>(query.size()) - n + 1;
        if (aspect_grams <= 0 || query_grams <= 0) continue;
        double sum = 0.0;
        for (long i = 0; i < aspect_grams; ++i) {
            for (long j = 0; j < query_grams; ++j) {
                std::string a = aspect[i];
                std::string q = query[j];
                for (int w = 1; w < n; ++w) {
                    a += " " + aspect[i + w];
                    q += " " + query[j + w];
                }
                sum += pt.paraphrase_score(a, q);
            }
        }
        total += sum / static_cast<double>(aspect_grams);
    }
    return total / max_order;
}

}  // namespace

TEST_CASE("word_overlap hand cases") {
    CorpusStats stats = flat_stats({"a", "b"});
    // equal idf for both words: {a,b} vs {a}
    CHECK(word_overlap({"a", "b"}, {"a"}, stats, OverlapDirection::TowardTable) == doctest::Approx(0.5));
    CHECK(word_overlap({"a", "b"}, {"a"}, stats, OverlapDirection::TowardQuery) == doctest::Approx(1.0));
    // aspect subset of query
    CHECK(word_overlap({"a"}, {"a", "b"}, stats, OverlapDirection::TowardTable) == doctest::Approx(1.0));
    // disjoint
    CHECK(word_overlap({"a"}, {"c"}, stats, OverlapDirection::TowardTable) == 0.0);
    CHECK(word_overlap({"a"}, {"c"}, stats, OverlapDirection::TowardQuery) == 0.0);
    // empty side
    CHECK(word_overlap({}, {"a"}, stats, OverlapDirection::TowardTable) == 0.0);
}

TEST_CASE("word_overlap uses token types, not occurrences") {
    CorpusStats stats = flat_stats({"a", "b"});
    double repeated = word_overlap({"a", "a", "b"}, {"a"}, stats, OverlapDirection::TowardTable);
    double once = word_overlap({"a", "b"}, {"a"}, stats, OverlapDirection::TowardTable);
    CHECK(repeated == doctest::Approx(once));
}

TEST_CASE("word_overlap stays within [0,1] and is symmetric under the double swap") {
    CorpusStats stats = flat_stats({"a", "b", "c", "d"}, 10, 3);
    std::vector<std::string> x = {"a", "b", "c"};
    std::vector<std::string> y = {"b", "d"};
    for (auto dir : {OverlapDirection::TowardTable, OverlapDirection::TowardQuery}) {
        double v = word_overlap(x, y, stats, dir);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(word_overlap(x, y, stats, OverlapDirection::TowardTable) ==
          doctest::Approx(word_overlap(y, x, stats, OverlapDirection::TowardQuery)));
}

TEST_CASE("paraphrase_score sums products over shared targets") {
    PhraseTable pt;
    SUBCASE("absent phrase scores zero") {
        CHECK(pt.paraphrase_score("x", "y") == 0.0);
        pt.add("x", "t", 1.0, 1.0);
        CHECK(pt.paraphrase_score("x", "missing") == 0.0);
    }
    SUBCASE("single shared target") {
        pt.add("x", "t", 1.0, 0.9);
        pt.add("y", "t", 0.3, 1.0);
        // p(t|x) * p(y|t) = 1.0 * 1.0
        CHECK(pt.paraphrase_score("x", "y") == doctest::Approx(1.0));
    }
    SUBCASE("two shared targets contributing 0.25 each") {
        pt.add("x", "t1", 0.5, 0.0);
        pt.add("x", "t2", 0.5, 0.0);
        pt.add("y", "t1", 0.0, 0.5);
        pt.add("y", "t2", 0.0, 0.5);
        CHECK(pt.paraphrase_score("x", "y") == doctest::Approx(0.5));
    }
    SUBCASE("identity entries are opt-in") {
        pt.add("x", "t", 0.5, 0.5);
        CHECK(pt.paraphrase_score("x", "x") == doctest::Approx(0.25));  // via the shared target only
        pt.add_identities();
        // now x -> x with both probabilities 1.0 adds a full unit
        CHECK(pt.paraphrase_score("x", "x") == doctest::Approx(1.25));
    }
}

TEST_CASE("phrase_feature degenerate single-token case") {
    PhraseTable pt;
    pt.add("x", "t", 1.0, 1.0);
    // order 1: score(x;x) = 1 over 1 aspect unigram; orders 2,3 degenerate
    CHECK(phrase_feature({"x"}, {"x"}, pt, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("phrase_feature is zero with an empty phrase table") {
    PhraseTable pt;
    CHECK(phrase_feature({"a", "b", "c"}, {"a", "b"}, pt, 3) == 0.0);
}

TEST_CASE("phrase_feature matches the enumeration oracle on crafted triples") {
    PhraseTable pt;
    pt.add("big", "T1", 0.8, 0.7);
    pt.add("large", "T1", 0.6, 0.9);
    pt.add("big city", "T2", 0.5, 0.4);
    pt.add("major town", "T2", 0.7, 0.3);
    pt.add("list of", "T3", 0.9, 0.9);
    pt.add("set of", "T3", 0.5, 0.8);
    pt.add("rivers", "T4", 1.0, 1.0);
    pt.add("streams", "T4", 0.4, 0.6);
    pt.add("of big", "T5", 0.2, 0.9);
    pt.add("of large", "T5", 0.3, 0.8);

    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> cases = {
        {{"big"}, {"large"}},
        {{"big", "city"}, {"major", "town"}},
        {{"list", "of", "rivers"}, {"set", "of", "streams"}},
        {{"of", "big", "city"}, {"of", "large"}},
        {{"rivers"}, {"rivers"}},
        {{"big", "city", "list", "of", "rivers"}, {"major", "town", "set", "of", "streams"}},
        {{"a", "b"}, {"c"}},
        {{"large", "large"}, {"big", "big"}},
        {{"list", "of"}, {"set", "of", "rivers", "streams"}},
        {{"of", "large", "streams"}, {"of", "big", "rivers"}},
    };
    for (const auto& [aspect, query] : cases) {
        double got = phrase_feature(aspect, query, pt, 3);
        double want = f_pp_oracle(aspect, query, pt, 3);
        CHECK(std::abs(got - want) < 1e-12);
        CHECK(got >= 0.0);
    }
}

TEST_CASE("avg_embedding_similarity hand cases") {
    // e1 = (1,0), e2 = (0,1), loaded through the text format
    namespace fs = std::filesystem;
    std::string path = (fs::temp_directory_path() / "tabret_emb_unit.txt").string();
    {
        std::ofstream out(path);
        out << "e1 1 0\n";
        out << "e2 0 1\n";
    }
    EmbeddingTable emb = EmbeddingTable::load(path);
    fs::remove(path);

    CHECK(avg_embedding_similarity({"e1", "e2"}, {"e1", "e2"}, emb) == doctest::Approx(1.0));
    CHECK(avg_embedding_similarity({"oov1"}, {"e1"}, emb) == 0.0);
    CHECK(avg_embedding_similarity({"e1", "e2"}, {"e1"}, emb) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // OOV tokens are skipped, not zero-filled
    CHECK(avg_embedding_similarity({"e1", "oov1", "oov2"}, {"e1"}, emb) == doctest::Approx(1.0));
}

TEST_CASE("designed_feature_vector ordering and empty-aspect convention") {
    Table t;
    t.id = "t";
    t.headers = {"city"};
    t.cells = {{"amsterdam"}};
    // no caption

    Query q;
    q.id = "q";
    q.text = "city";
    q.tokens = {"city"};

    CorpusStats stats = flat_stats({"city", "amsterdam"});
    PhraseTable pt;
    EmbeddingTable emb;
    {
        namespace fs = std::filesystem;
        std::string path = (fs::temp_directory_path() / "tabret_emb_unit2.txt").string();
        std::ofstream(path) << "city 1 0\namsterdam 0 1\n";
        emb = EmbeddingTable::load(path);
        fs::remove(path);
    }
    CdssmConfig cfg;
    cfg.trigram_dims = 256;
    cfg.subword_dim = 8;
    cfg.conv_dim = 8;
    cfg.output_dim = 8;
    CdssmParams encoder = init_cdssm(cfg);

    FeatureResources resources{&stats, &pt, &emb, &encoder, 3};
    std::vector<Aspect> all = {Aspect::Headers, Aspect::Cells, Aspect::Caption};

    std::vector<std::string> names = designed_feature_names(all);
    REQUIRE(names.size() == 15);
    CHECK(names[0] == "headers_wmt");
    CHECK(names[4] == "headers_s2");
    CHECK(names[5] == "cells_wmt");
    CHECK(names[10] == "caption_wmt");

    std::vector<double> values = designed_feature_vector(q, t, resources, all);
    REQUIRE(values.size() == 15);
    // headers identical to query: wmt = wmq = 1, s2 = 1
    CHECK(values[0] == doctest::Approx(1.0));
    CHECK(values[1] == doctest::Approx(1.0));
    CHECK(values[4] == doctest::Approx(1.0));
    // absent caption: all five zero
    for (size_t i = 10; i < 15; ++i) CHECK(values[i] == 0.0);
}

TEST_CASE("designed_feature_vector names the missing resource") {
    Table t;
    t.id = "t";
    t.headers = {"a"};
    t.cells = {{"b"}};
    Query q;
    q.id = "q";
    q.tokens = {"a"};
    CorpusStats stats = flat_stats({"a", "b"});
    PhraseTable pt;
    FeatureResources no_embeddings{&stats, &pt, nullptr, nullptr, 3};
    CHECK_THROWS_WITH_AS(
        designed_feature_vector(q, t, no_embeddings, {Aspect::Headers}),
        doctest::Contains("embedding"), Error);
}

TEST_CASE("canonical_aspects keeps the fixed order") {
    std::vector<Aspect> mixed = {Aspect::Caption, Aspect::Headers};
    std::vector<Aspect> canon = canonical_aspects(mixed);
    REQUIRE(canon.size() == 2);
    CHECK(canon[0] == Aspect::Headers);
    CHECK(canon[1] == Aspect::Caption);
}
