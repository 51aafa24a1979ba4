#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>

#include "tabret.h"

namespace {

namespace fs = std::filesystem;

struct Workspace {
    fs::path dir;

    Workspace() {
        dir = fs::temp_directory_path() / ("tabret_capi_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        write("corpus.jsonl",
              R"({"id":"t1","headers":["city","population"],"rows":[["amsterdam","800"],["rotterdam","600"]],"caption":"dutch cities list"})"
              "\n"
              R"({"id":"t2","headers":["year","winner"],"rows":[["2001","ajax"],["2002","psv"]],"caption":"cup winners list"})"
              "\n"
              R"({"id":"t3","headers":["river","length"],"rows":[["rhine","1230"],["meuse","925"]],"caption":"dutch rivers list"})"
              "\n"
              R"({"id":"bad","headers":["a","b"],"rows":[["only one"]]})"
              "\n");
        write("queries.jsonl",
              R"({"id":"q1","text":"dutch cities","relevant_table_ids":["t1"]})"
              "\n"
              R"({"id":"q2","text":"winners list","relevant_table_ids":["t2"]})"
              "\n"
              R"({"id":"q3","text":"dutch rivers","relevant_table_ids":["t3"]})"
              "\n"
              R"({"id":"q4","text":"list of rivers","relevant_table_ids":["t3"]})"
              "\n");
        write("pairs.tsv",
              "dutch cities\tcities of the netherlands\n"
              "cup winners\twinners of the cup\n"
              "river lengths\tlength of rivers\n"
              "city list\tlist of cities\n");
        write("phrases.txt",
              "cities ||| STADT ||| 0.9 0.8\n"
              "towns ||| STADT ||| 0.5 0.4\n");
        write("embeddings.txt",
              "5 4\n"
              "dutch 1 0 0 0\n"
              "cities 0 1 0 0\n"
              "cup 0 0 1 0\n"
              "winners 0 0 0 1\n"
              "river 0.5 0.5 0 0\n");
    }

    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream out(dir / name);
        out << content;
    }

    std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(tabret_version()) > 0);
    CHECK(std::string(tabret_status_name(TABRET_OK)) == "ok");
    CHECK(std::string(tabret_status_name(TABRET_ERR_IO)) == "io error");
}

TEST_CASE("errors surface a status code and a message") {
    tabret_corpus* corpus = nullptr;
    tabret_status status = tabret_corpus_open("/nonexistent/corpus.jsonl", &corpus);
    CHECK(status == TABRET_ERR_IO);
    CHECK(std::strlen(tabret_last_error()) > 0);
    CHECK(corpus == nullptr);

    CHECK(tabret_corpus_open(nullptr, &corpus) == TABRET_ERR_INVALID_ARGUMENT);
}

TEST_CASE("full stage chain through the C API") {
    Workspace ws;

    tabret_corpus* corpus = nullptr;
    REQUIRE(tabret_corpus_open(ws.p("corpus.jsonl").c_str(), &corpus) == TABRET_OK);
    CHECK(tabret_corpus_size(corpus) == 3);
    REQUIRE(tabret_corpus_rejected(corpus) == 1);  // the ragged table
    CHECK(std::string(tabret_corpus_rejected_id(corpus, 0)) == "bad");
    CHECK(std::string(tabret_corpus_rejected_reason(corpus, 0)).find("row 0") != std::string::npos);

    tabret_queries* queries = nullptr;
    REQUIRE(tabret_queries_open(ws.p("queries.jsonl").c_str(), &queries) == TABRET_OK);
    CHECK(tabret_queries_size(queries) == 4);

    tabret_index* index = nullptr;
    REQUIRE(tabret_index_build(corpus, "caption,headers", 1.2, 0.75, &index) == TABRET_OK);

    SUBCASE("retrieval hits") {
        tabret_hits* hits = nullptr;
        REQUIRE(tabret_index_retrieve(index, "dutch cities", 10, &hits) == TABRET_OK);
        REQUIRE(tabret_hits_count(hits) >= 1);
        CHECK(std::string(tabret_hits_table_id(hits, 0)) == "t1");
        CHECK(tabret_hits_score(hits, 0) > 0.0);
        tabret_hits_free(hits);

        double score = 0.0;
        REQUIRE(tabret_index_score(index, "dutch cities", "t1", &score) == TABRET_OK);
        CHECK(score > 0.0);
        CHECK(tabret_index_score(index, "dutch cities", "zzz", &score) == TABRET_ERR_NOT_FOUND);

        double recall = 0.0;
        REQUIRE(tabret_candidate_recall(index, queries, 5, &recall) == TABRET_OK);
        CHECK(recall > 0.5);
    }

    SUBCASE("index round trip through a file") {
        REQUIRE(tabret_index_save(index, ws.p("index.txt").c_str()) == TABRET_OK);
        REQUIRE(tabret_index_save_stats(index, ws.p("stats.txt").c_str()) == TABRET_OK);
        tabret_index* loaded = nullptr;
        REQUIRE(tabret_index_open(ws.p("index.txt").c_str(), &loaded) == TABRET_OK);
        tabret_hits* hits = nullptr;
        REQUIRE(tabret_index_retrieve(loaded, "river lengths", 5, &hits) == TABRET_OK);
        REQUIRE(tabret_hits_count(hits) >= 1);
        CHECK(std::string(tabret_hits_table_id(hits, 0)) == "t3");
        tabret_hits_free(hits);
        tabret_index_free(loaded);
    }

    SUBCASE("training, featurization, ranking and evaluation") {
        tabret_phrase_table* pt = nullptr;
        REQUIRE(tabret_phrase_table_open(ws.p("phrases.txt").c_str(), &pt) == TABRET_OK);
        tabret_embeddings* emb = nullptr;
        REQUIRE(tabret_embeddings_open(ws.p("embeddings.txt").c_str(), &emb) == TABRET_OK);

        tabret_cdssm_options copt = tabret_cdssm_options_default();
        copt.trigram_dims = 256;
        copt.subword_dim = 8;
        copt.conv_dim = 8;
        copt.output_dim = 8;
        copt.epochs = 3;
        tabret_cdssm* cdssm = nullptr;
        REQUIRE(tabret_cdssm_train(ws.p("pairs.tsv").c_str(), &copt, ws.p("cdssm_loss.txt").c_str(),
                                   &cdssm) == TABRET_OK);
        REQUIRE(fs::exists(ws.p("cdssm_loss.txt")));
        REQUIRE(tabret_cdssm_save(cdssm, ws.p("cdssm.bin").c_str()) == TABRET_OK);
        tabret_cdssm* cdssm2 = nullptr;
        REQUIRE(tabret_cdssm_open(ws.p("cdssm.bin").c_str(), &cdssm2) == TABRET_OK);
        tabret_cdssm_free(cdssm2);

        tabret_nn_options nopt = tabret_nn_options_default();
        nopt.embed_dim = 8;
        nopt.hidden_dim = 6;
        nopt.epochs = 3;
        tabret_models* models = nullptr;
        REQUIRE(tabret_models_train(corpus, queries, index, "headers,cells,caption", &nopt, nullptr,
                                    &models) == TABRET_OK);
        REQUIRE(tabret_models_save(models, ws.p("models.bin").c_str()) == TABRET_OK);

        tabret_featurize_options fopt = tabret_featurize_options_default();
        fopt.topk = 5;
        tabret_features* features = nullptr;
        REQUIRE(tabret_featurize(corpus, queries, index, pt, emb, cdssm, models, &fopt, &features) ==
                TABRET_OK);
        REQUIRE(tabret_features_save(features, ws.p("features.txt").c_str()) == TABRET_OK);

        tabret_ranker_options ropt = tabret_ranker_options_default();
        ropt.num_trees = 20;
        tabret_forest* forest = nullptr;
        REQUIRE(tabret_ranker_train(features, &ropt, nullptr, &forest) == TABRET_OK);
        REQUIRE(tabret_forest_save(forest, ws.p("forest.txt").c_str()) == TABRET_OK);

        tabret_report* report = nullptr;
        REQUIRE(tabret_evaluate(features, forest, 1, &report) == TABRET_OK);
        CHECK(tabret_report_metrics_defined(report) == 1);
        CHECK(tabret_report_map(report) > 0.0);
        CHECK(tabret_report_map(report) <= 1.0);
        CHECK(tabret_report_has_baseline(report) == 1);
        REQUIRE(tabret_report_write(report, (ws.dir / "report").string().c_str()) == TABRET_OK);
        CHECK(fs::exists(ws.dir / "report" / "report.json"));
        CHECK(fs::exists(ws.dir / "report" / "pr_curve.csv"));

        // pr-curve from the ranked results file
        REQUIRE(tabret_pr_curve_file((ws.dir / "report" / "ranked.jsonl").string().c_str(), nullptr, 0,
                                     ws.p("pr2.csv").c_str()) == TABRET_OK);
        CHECK(fs::exists(ws.p("pr2.csv")));

        // BM25-only evaluation (no forest)
        tabret_report* bm25_report = nullptr;
        REQUIRE(tabret_evaluate(features, nullptr, 1, &bm25_report) == TABRET_OK);
        CHECK(tabret_report_metrics_defined(bm25_report) == 1);
        tabret_report_free(bm25_report);

        tabret_report_free(report);
        tabret_forest_free(forest);
        tabret_features_free(features);
        tabret_models_free(models);
        tabret_cdssm_free(cdssm);
        tabret_embeddings_free(emb);
        tabret_phrase_table_free(pt);
    }

    tabret_index_free(index);
    tabret_queries_free(queries);
    tabret_corpus_free(corpus);
}

TEST_CASE("queries split through the C API") {
    Workspace ws;
    tabret_queries* queries = nullptr;
    REQUIRE(tabret_queries_open(ws.p("queries.jsonl").c_str(), &queries) == TABRET_OK);
    tabret_queries *train = nullptr, *val = nullptr, *test = nullptr;
    REQUIRE(tabret_queries_split(queries, 0.5, 0.25, 0.25, 7, &train, &val, &test) == TABRET_OK);
    CHECK(tabret_queries_size(train) + tabret_queries_size(val) + tabret_queries_size(test) ==
          tabret_queries_size(queries));
    CHECK(tabret_queries_size(train) == 2);
    tabret_queries_free(train);
    tabret_queries_free(val);
    tabret_queries_free(test);
    tabret_queries_free(queries);
}

TEST_CASE("featurize validates its resource handles") {
    Workspace ws;
    tabret_corpus* corpus = nullptr;
    REQUIRE(tabret_corpus_open(ws.p("corpus.jsonl").c_str(), &corpus) == TABRET_OK);
    tabret_queries* queries = nullptr;
    REQUIRE(tabret_queries_open(ws.p("queries.jsonl").c_str(), &queries) == TABRET_OK);
    tabret_index* index = nullptr;
    REQUIRE(tabret_index_build(corpus, "caption,headers", 1.2, 0.75, &index) == TABRET_OK);

    tabret_featurize_options fopt = tabret_featurize_options_default();
    tabret_features* features = nullptr;
    CHECK(tabret_featurize(corpus, queries, index, nullptr, nullptr, nullptr, nullptr, &fopt,
                           &features) == TABRET_ERR_INVALID_ARGUMENT);
    CHECK(std::string(tabret_last_error()).find("designed") != std::string::npos);

    tabret_index_free(index);
    tabret_queries_free(queries);
    tabret_corpus_free(corpus);
}
