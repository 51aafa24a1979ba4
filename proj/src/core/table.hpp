#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tabret {

// The three parts of a table that features and indexes can draw text from.
enum class Aspect { Headers, Cells, Caption };

const char* aspect_name(Aspect a);
Aspect aspect_from_name(const std::string& name);

// Parses a comma-separated aspect list such as "caption,headers".
std::vector<Aspect> parse_aspect_list(const std::string& csv);
std::string aspect_list_to_string(const std::vector<Aspect>& aspects);

struct Table {
    std::string id;
    std::vector<std::string> headers;               // one entry per column
    std::vector<std::vector<std::string>> cells;    // row-major
    std::optional<std::string> caption;

    size_t num_columns() const { return headers.size(); }
    size_t num_rows() const { return cells.size(); }
};

struct Query {
    std::string id;
    std::string text;
    std::vector<std::string> tokens;
    std::vector<std::string> relevant_table_ids;    // empty for unlabeled queries
};

struct RegularityReport {
    std::string table_id;
    bool is_regular = true;
    std::vector<std::string> violations;
};

struct Corpus {
    std::vector<Table> tables;                      // load order preserved
    std::map<std::string, size_t> id_to_index;
    std::string provenance;

    const Table* find(const std::string& id) const;
    size_t size() const { return tables.size(); }
};

// A table is regular when it has at least one header, at least one row, and
// every row has exactly one cell per header.
RegularityReport validate_regular(const Table& table);

// Parses one corpus record (a JSON object with id/headers/rows and optional
// caption). Field values are copied verbatim; tokenization happens later.
Table parse_table_record(const std::string& json_line);

std::string table_to_record(const Table& table);

struct CorpusLoadResult {
    Corpus corpus;
    std::vector<RegularityReport> rejected;  // irregular tables, excluded
};

// Loads a line-delimited corpus file. Irregular tables are rejected and
// reported, not repaired. Duplicate ids abort the load.
CorpusLoadResult load_corpus(const std::string& path);

// Loads a line-delimited query file ({id, text, relevant_table_ids?}).
// Tokens are filled with the standard tokenizer.
std::vector<Query> load_queries(const std::string& path);

void save_queries(const std::vector<Query>& queries, const std::string& path);

// Flattens one aspect of a regular table into a token sequence: headers in
// column order, cells row-major, caption as-is (empty when absent).
std::vector<std::string> aspect_text(const Table& table, Aspect aspect);

}  // namespace tabret
