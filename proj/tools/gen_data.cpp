// Generates the bundled synthetic benchmark: a table corpus whose captions,
// headers and cells each carry retrieval signal, labeled queries, a small
// word-embedding file, an SMT-style phrase table and paraphrase pairs for the
// sub-word encoder. Deterministic for a fixed seed.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace {

const std::vector<std::string> kNouns = {
    "mountains", "rivers",     "bridges",   "castles",   "airports",  "lakes",     "volcanoes",
    "museums",   "stadiums",   "harbors",   "islands",   "glaciers",  "forests",   "deserts",
    "waterfalls", "canyons",   "lighthouses", "cathedrals", "universities", "libraries", "towers",
    "tunnels",   "dams",       "mines",     "vineyards", "orchards",  "farms",     "ranches",
    "villages",  "towns",      "temples",   "palaces",   "fortresses", "monuments", "gardens",
    "parks",     "zoos",       "aquariums", "observatories", "theaters", "operas",  "galleries",
    "markets",   "plazas",     "fountains", "windmills", "ferries",   "railways",  "highways",
    "canals"};

const std::vector<std::string> kPlaces = {
    "norway",   "peru",      "japan",    "kenya",    "chile",    "india",     "spain",
    "italy",    "egypt",     "brazil",   "canada",   "france",   "greece",    "turkey",
    "poland",   "sweden",    "austria",  "belgium",  "denmark",  "finland",   "croatia",
    "serbia",   "hungary",   "romania",  "portugal", "ireland",  "scotland",  "iceland",
    "morocco",  "tunisia",   "jordan",   "vietnam",  "thailand", "malaysia",  "indonesia",
    "australia", "argentina", "bolivia",  "ecuador",  "uruguay",  "panama",    "cuba",
    "jamaica",  "mexico",    "nepal",    "bhutan",   "laos",     "mongolia",  "georgia",
    "armenia",  "latvia",    "estonia",  "slovakia", "slovenia", "albania",   "moldova",
    "belarus",  "ukraine",   "bavaria",  "tuscany"};

const std::vector<std::string> kAttrs = {
    "height",   "length",    "depth",    "width",    "area",     "elevation", "capacity",
    "population", "founded", "opened",   "age",      "weight",   "volume",    "speed",
    "duration", "distance",  "altitude", "visitors", "rainfall", "budget",    "rank",
    "tonnage",  "span",      "yield"};

const std::vector<std::pair<std::string, std::string>> kModifierPairs = {
    {"largest", "biggest"},   {"highest", "tallest"},  {"famous", "renowned"},
    {"ancient", "historic"},  {"remote", "isolated"},  {"scenic", "picturesque"},
    {"popular", "beloved"},   {"hidden", "secret"}};

enum class GroupKind { CellPlace, HeaderAttr, CaptionPlace };

struct TableSpec {
    std::string id;
    std::string caption;
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;
    std::string place;
};

struct GroupSpec {
    GroupKind kind;
    std::string noun;
    std::string modifier;
    std::string modifier_alt;
    std::vector<TableSpec> tables;  // 4 per group
};

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

class Generator {
public:
    Generator(uint64_t seed, size_t num_groups, size_t num_queries)
        : rng_(seed), num_groups_(num_groups), num_queries_(num_queries) {
        for (const auto& w : kNouns) used_.insert(w);
        for (const auto& w : kPlaces) used_.insert(w);
        for (const auto& w : kAttrs) used_.insert(w);
        for (const auto& [a, b] : kModifierPairs) {
            used_.insert(a);
            used_.insert(b);
        }
    }

    void run(const std::string& out_dir) {
        build_groups();
        std::filesystem::create_directories(out_dir);
        write_corpus(out_dir + "/corpus.jsonl");
        write_queries(out_dir + "/queries.jsonl");
        write_embeddings(out_dir + "/embeddings.txt");
        write_phrase_table(out_dir + "/phrase_table.txt");
        write_paraphrases(out_dir + "/paraphrases.tsv");
    }

private:
    std::mt19937_64 rng_;
    size_t num_groups_;
    size_t num_queries_;
    std::vector<GroupSpec> groups_;
    std::set<std::string> used_;

    size_t pick(size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng_); }

    std::string fresh_entity() {
        static const std::string consonants = "bcdfgklmnprstvz";
        static const std::string vowels = "aeiou";
        for (;;) {
            std::string word;
            for (int s = 0; s < 3; ++s) {
                word += consonants[pick(consonants.size())];
                word += vowels[pick(vowels.size())];
            }
            if (!used_.count(word)) {
                used_.insert(word);
                return word;
            }
        }
    }

    std::string number() { return std::to_string(10 + pick(9990)); }

    void build_groups() {
        std::vector<size_t> place_order(kPlaces.size());
        for (size_t i = 0; i < place_order.size(); ++i) place_order[i] = i;
        std::shuffle(place_order.begin(), place_order.end(), rng_);

        for (size_t g = 0; g < num_groups_; ++g) {
            GroupSpec group;
            group.kind = g % 3 == 0   ? GroupKind::CellPlace
                         : g % 3 == 1 ? GroupKind::HeaderAttr
                                      : GroupKind::CaptionPlace;
            group.noun = kNouns[g % kNouns.size()];
            const auto& [mod, alt] = kModifierPairs[g % kModifierPairs.size()];
            group.modifier = mod;
            group.modifier_alt = alt;

            // 4 distinct places per group
            std::vector<std::string> places;
            for (size_t j = 0; j < 4; ++j) {
                places.push_back(kPlaces[place_order[(g * 4 + j) % kPlaces.size()]]);
            }
            std::string attr_shared_1 = kAttrs[(g * 2) % kAttrs.size()];
            std::string attr_shared_2 = kAttrs[(g * 2 + 1) % kAttrs.size()];

            for (size_t j = 0; j < 4; ++j) {
                TableSpec table;
                table.id = "t" + std::to_string(g * 4 + j + 100);
                table.place = places[j];

                std::string attr1 = attr_shared_1, attr2 = attr_shared_2;
                if (group.kind == GroupKind::HeaderAttr) {
                    // distinguishing attribute per table within the group
                    attr1 = kAttrs[(g * 4 + j * 7 + 3) % kAttrs.size()];
                    attr2 = kAttrs[(g * 4 + j * 7 + 11) % kAttrs.size()];
                    if (attr1 == attr2) attr2 = kAttrs[(g * 4 + j * 7 + 12) % kAttrs.size()];
                }
                table.headers = {"name", attr1, attr2, "country"};

                switch (group.kind) {
                    case GroupKind::CellPlace:
                        table.caption = "list of " + group.modifier + " " + group.noun;
                        break;
                    case GroupKind::HeaderAttr:
                        table.caption = "list of " + group.noun + " records";
                        break;
                    case GroupKind::CaptionPlace:
                        table.caption = group.modifier + " " + group.noun + " of " + places[j];
                        break;
                }

                size_t rows = 3 + (g + j) % 3;
                for (size_t r = 0; r < rows; ++r) {
                    table.rows.push_back({fresh_entity(), number(), number(), places[j]});
                }
                group.tables.push_back(std::move(table));
            }
            groups_.push_back(std::move(group));
        }
    }

    void write_corpus(const std::string& path) {
        std::ofstream out(path);
        for (const auto& group : groups_) {
            for (const auto& t : group.tables) {
                out << "{\"id\":\"" << t.id << "\",\"caption\":\"" << json_escape(t.caption)
                    << "\",\"headers\":[";
                for (size_t i = 0; i < t.headers.size(); ++i) {
                    out << (i ? "," : "") << "\"" << json_escape(t.headers[i]) << "\"";
                }
                out << "],\"rows\":[";
                for (size_t r = 0; r < t.rows.size(); ++r) {
                    out << (r ? "," : "") << "[";
                    for (size_t c = 0; c < t.rows[r].size(); ++c) {
                        out << (c ? "," : "") << "\"" << json_escape(t.rows[r][c]) << "\"";
                    }
                    out << "]";
                }
                out << "]}\n";
            }
        }
    }

    void write_queries(const std::string& path) {
        std::ofstream out(path);
        for (size_t q = 0; q < num_queries_; ++q) {
            const GroupSpec& group = groups_[q % groups_.size()];
            size_t j = pick(4);
            const TableSpec& target = group.tables[j];

            bool use_alt = q % 2 == 1;  // paraphrased modifier half the time
            std::string mod = use_alt ? group.modifier_alt : group.modifier;
            std::string text;
            switch (group.kind) {
                case GroupKind::CellPlace:
                case GroupKind::CaptionPlace:
                    text = mod + " " + group.noun + " " + target.place;
                    break;
                case GroupKind::HeaderAttr:
                    text = group.noun + " " + target.headers[1] + " " + target.place;
                    break;
            }
            if (q % 4 == 0) text = "list of " + text;
            if (q % 7 == 0) text += " data";

            out << "{\"id\":\"q" << (q < 10 ? "0" : "") << q << "\",\"text\":\"" << json_escape(text)
                << "\",\"relevant_table_ids\":[\"" << target.id << "\"]}\n";
        }
    }

    void write_embeddings(const std::string& path) {
        const int dim = 32;
        std::set<std::string> vocab(kNouns.begin(), kNouns.end());
        vocab.insert(kPlaces.begin(), kPlaces.end());
        vocab.insert(kAttrs.begin(), kAttrs.end());
        for (const std::string& w : {"name", "country", "list", "of", "records", "data"}) vocab.insert(w);

        std::normal_distribution<double> gauss(0.0, 1.0);
        auto random_vec = [&] {
            std::vector<double> v(dim);
            double norm = 0.0;
            for (double& x : v) {
                x = gauss(rng_);
                norm += x * x;
            }
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
            return v;
        };

        std::vector<std::pair<std::string, std::vector<double>>> rows;
        for (const auto& w : vocab) rows.emplace_back(w, random_vec());
        // paraphrase pairs live close together
        for (const auto& [a, b] : kModifierPairs) {
            std::vector<double> base = random_vec();
            std::vector<double> shifted = base;
            for (double& x : shifted) x += 0.15 * gauss(rng_);
            rows.emplace_back(a, base);
            rows.emplace_back(b, shifted);
        }

        std::ofstream out(path);
        out << rows.size() << " " << dim << "\n";
        out.precision(6);
        for (const auto& [word, vec] : rows) {
            out << word;
            for (double x : vec) out << " " << x;
            out << "\n";
        }
    }

    void write_phrase_table(const std::string& path) {
        std::ofstream out(path);
        size_t k = 0;
        for (const auto& [a, b] : kModifierPairs) {
            std::string target = "P" + std::to_string(k++);
            out << a << " ||| " << target << " ||| 0.80 0.70\n";
            out << b << " ||| " << target << " ||| 0.80 0.70\n";
        }
        // shared-target self entries give exact word matches a phrase score
        std::set<std::string> content(kNouns.begin(), kNouns.end());
        content.insert(kPlaces.begin(), kPlaces.end());
        content.insert(kAttrs.begin(), kAttrs.end());
        for (const auto& w : content) {
            out << w << " ||| W" << k++ << " ||| 0.90 0.90\n";
        }
        out << "list of ||| B" << k++ << " ||| 0.90 0.85\n";
    }

    void write_paraphrases(const std::string& path) {
        std::ofstream out(path);
        for (size_t i = 0; i < 200; ++i) {
            const auto& [mod, alt] = kModifierPairs[pick(kModifierPairs.size())];
            const std::string& noun = kNouns[pick(kNouns.size())];
            const std::string& place = kPlaces[pick(kPlaces.size())];
            switch (i % 3) {
                case 0:
                    out << mod << " " << noun << " " << place << "\t" << alt << " " << noun << " of "
                        << place << "\n";
                    break;
                case 1:
                    out << "list of " << mod << " " << noun << "\t" << alt << " " << noun << " list\n";
                    break;
                default:
                    out << noun << " of " << place << "\t" << place << " " << noun << "\n";
                    break;
            }
        }
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled synthetic table-retrieval benchmark"};
    std::string out_dir = "data";
    uint64_t seed = 7;
    size_t groups = 50, queries = 60;
    app.add_option("--out-dir", out_dir, "output directory (default data)");
    app.add_option("--seed", seed, "rng seed (default 7)");
    app.add_option("--groups", groups, "table groups of four (default 50)");
    app.add_option("--queries", queries, "labeled queries (default 60)");
    CLI11_PARSE(app, argc, argv);

    Generator gen(seed, groups, queries);
    gen.run(out_dir);
    std::printf("wrote %zu tables and %zu queries to %s\n", groups * 4, queries, out_dir.c_str());
    return 0;
}
