#include "core/table.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/common.hpp"
#include "core/text.hpp"

namespace tabret {

using nlohmann::json;

const char* aspect_name(Aspect a) {
    switch (a) {
        case Aspect::Headers: return "headers";
        case Aspect::Cells: return "cells";
        case Aspect::Caption: return "caption";
    }
    return "?";
}

Aspect aspect_from_name(const std::string& name) {
    if (name == "headers") return Aspect::Headers;
    if (name == "cells") return Aspect::Cells;
    if (name == "caption") return Aspect::Caption;
    fail(ErrorKind::InvalidArgument, "unknown aspect '" + name + "' (expected headers, cells or caption)");
}

std::vector<Aspect> parse_aspect_list(const std::string& csv) {
    std::vector<Aspect> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        Aspect a = aspect_from_name(item);
        for (Aspect seen : out) {
            if (seen == a) fail(ErrorKind::InvalidArgument, "duplicate aspect '" + item + "'");
        }
        out.push_back(a);
    }
    if (out.empty()) fail(ErrorKind::InvalidArgument, "empty aspect list");
    return out;
}

std::string aspect_list_to_string(const std::vector<Aspect>& aspects) {
    std::string out;
    for (size_t i = 0; i < aspects.size(); ++i) {
        if (i) out += ',';
        out += aspect_name(aspects[i]);
    }
    return out;
}

const Table* Corpus::find(const std::string& id) const {
    auto it = id_to_index.find(id);
    return it == id_to_index.end() ? nullptr : &tables[it->second];
}

RegularityReport validate_regular(const Table& table) {
    RegularityReport report;
    report.table_id = table.id;
    if (table.headers.empty()) {
        report.violations.push_back("table has no headers");
    }
    if (table.cells.empty()) {
        report.violations.push_back("table has no rows");
    }
    for (size_t r = 0; r < table.cells.size(); ++r) {
        if (table.cells[r].size() != table.headers.size()) {
            report.violations.push_back("row " + std::to_string(r) + " has " +
                                        std::to_string(table.cells[r].size()) + " cells, expected " +
                                        std::to_string(table.headers.size()));
        }
    }
    report.is_regular = report.violations.empty();
    return report;
}

Table parse_table_record(const std::string& json_line) {
    json rec;
    try {
        rec = json::parse(json_line);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("malformed table record: ") + e.what());
    }
    if (!rec.is_object()) fail(ErrorKind::Parse, "table record is not an object");
    if (!rec.contains("id") || !rec["id"].is_string()) {
        fail(ErrorKind::Parse, "table record missing field 'id'");
    }
    if (!rec.contains("headers") || !rec["headers"].is_array()) {
        fail(ErrorKind::Parse, "table record missing field 'headers'");
    }
    if (!rec.contains("rows") || !rec["rows"].is_array()) {
        fail(ErrorKind::Parse, "table record missing field 'rows'");
    }

    Table t;
    t.id = rec["id"].get<std::string>();
    if (t.id.empty() || t.id.find_first_of(" \t\n\r") != std::string::npos) {
        fail(ErrorKind::Parse, "table id must be non-empty and whitespace-free: '" + t.id + "'");
    }
    for (const auto& h : rec["headers"]) {
        if (!h.is_string()) fail(ErrorKind::Parse, "header entries must be strings (table " + t.id + ")");
        t.headers.push_back(h.get<std::string>());
    }
    for (const auto& row : rec["rows"]) {
        if (!row.is_array()) fail(ErrorKind::Parse, "row entries must be arrays (table " + t.id + ")");
        std::vector<std::string> cells;
        for (const auto& c : row) {
            if (!c.is_string()) fail(ErrorKind::Parse, "cell entries must be strings (table " + t.id + ")");
            cells.push_back(c.get<std::string>());
        }
        t.cells.push_back(std::move(cells));
    }
    if (rec.contains("caption") && !rec["caption"].is_null()) {
        if (!rec["caption"].is_string()) fail(ErrorKind::Parse, "caption must be a string (table " + t.id + ")");
        t.caption = rec["caption"].get<std::string>();
    }

    RegularityReport report = validate_regular(t);
    if (!report.is_regular) {
        std::string msg = "irregular table " + t.id + ":";
        for (const auto& v : report.violations) msg += " " + v + ";";
        fail(ErrorKind::Parse, msg);
    }
    return t;
}

std::string table_to_record(const Table& table) {
    json rec;
    rec["id"] = table.id;
    rec["headers"] = table.headers;
    rec["rows"] = table.cells;
    if (table.caption) rec["caption"] = *table.caption;
    return rec.dump();
}

CorpusLoadResult load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open corpus file: " + path);

    CorpusLoadResult result;
    result.corpus.provenance = path;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Table t;
        try {
            t = parse_table_record(line);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Parse && std::string(e.what()).rfind("irregular table", 0) == 0) {
                // Irregular tables are rejected, not repaired; the caller gets
                // the report and the load continues.
                json rec = json::parse(line, nullptr, false);
                Table raw;
                raw.id = rec.is_object() && rec.contains("id") && rec["id"].is_string()
                             ? rec["id"].get<std::string>()
                             : ("line " + std::to_string(line_no));
                if (rec.is_object() && rec.contains("headers") && rec["headers"].is_array()) {
                    for (const auto& h : rec["headers"])
                        if (h.is_string()) raw.headers.push_back(h.get<std::string>());
                }
                if (rec.is_object() && rec.contains("rows") && rec["rows"].is_array()) {
                    for (const auto& row : rec["rows"]) {
                        std::vector<std::string> cells;
                        if (row.is_array())
                            for (const auto& c : row)
                                if (c.is_string()) cells.push_back(c.get<std::string>());
                        raw.cells.push_back(std::move(cells));
                    }
                }
                result.rejected.push_back(validate_regular(raw));
                continue;
            }
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (result.corpus.id_to_index.count(t.id)) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": duplicate table id '" + t.id + "'");
        }
        result.corpus.id_to_index[t.id] = result.corpus.tables.size();
        result.corpus.tables.push_back(std::move(t));
    }
    return result;
}

std::vector<Query> load_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open query file: " + path);

    std::vector<Query> queries;
    std::map<std::string, size_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": malformed query record");
        }
        if (!rec.contains("id") || !rec["id"].is_string()) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": query record missing field 'id'");
        }
        if (!rec.contains("text") || !rec["text"].is_string()) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": query record missing field 'text'");
        }
        Query q;
        q.id = rec["id"].get<std::string>();
        if (q.id.empty() || q.id.find_first_of(" \t\n\r") != std::string::npos) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": query id must be non-empty and whitespace-free");
        }
        q.text = rec["text"].get<std::string>();
        q.tokens = tokenize(q.text);
        if (rec.contains("relevant_table_ids")) {
            for (const auto& rid : rec["relevant_table_ids"]) {
                if (rid.is_string()) q.relevant_table_ids.push_back(rid.get<std::string>());
            }
        }
        if (seen.count(q.id)) {
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": duplicate query id '" + q.id + "'");
        }
        seen[q.id] = line_no;
        queries.push_back(std::move(q));
    }
    return queries;
}

void save_queries(const std::vector<Query>& queries, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write query file: " + path);
    for (const auto& q : queries) {
        json rec;
        rec["id"] = q.id;
        rec["text"] = q.text;
        if (!q.relevant_table_ids.empty()) rec["relevant_table_ids"] = q.relevant_table_ids;
        out << rec.dump() << "\n";
    }
}

std::vector<std::string> aspect_text(const Table& table, Aspect aspect) {
    std::vector<std::string> tokens;
    auto append = [&tokens](const std::string& text) {
        std::vector<std::string> t = tokenize(text);
        tokens.insert(tokens.end(), t.begin(), t.end());
    };
    switch (aspect) {
        case Aspect::Headers:
            for (const auto& h : table.headers) append(h);
            break;
        case Aspect::Cells:
            for (const auto& row : table.cells)
                for (const auto& c : row) append(c);
            break;
        case Aspect::Caption:
            if (table.caption) append(*table.caption);
            break;
    }
    return tokens;
}

}  // namespace tabret
