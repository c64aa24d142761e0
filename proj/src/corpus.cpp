#include "llmfrac/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "llmfrac/errors.hpp"
#include "llmfrac/rng.hpp"

namespace llmfrac {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    auto sp = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
    while (b < e && sp(s[b])) ++b;
    while (e > b && sp(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_number(std::string_view s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path.string());

    LoadReport local;
    LoadReport& rep = report ? *report : local;

    Corpus corpus;
    corpus.source_label = path.filename().string();
    std::unordered_set<std::string> seen_ids;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++rep.lines_total;

        auto fail = [&](const std::string& reason) {
            rep.errors.push_back({line_no, reason});
        };

        json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object()) {
            fail("not a JSON object");
            continue;
        }

        Document doc;
        if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            fail("missing or empty \"id\"");
            continue;
        }
        doc.id = j["id"].get<std::string>();
        if (!seen_ids.insert(doc.id).second) {
            fail("duplicate id \"" + doc.id + "\"");
            continue;
        }
        if (!j.contains("text") || !j["text"].is_string()) {
            fail("missing \"text\"");
            continue;
        }
        doc.text = j["text"].get<std::string>();
        if (trim(doc.text).empty()) {
            fail("\"text\" empty after trim");
            continue;
        }
        if (!j.contains("date") || !j["date"].is_string() ||
            !Date::try_parse(j["date"].get<std::string>(), doc.date)) {
            fail("missing or invalid \"date\" (want YYYY-MM-DD in [1900-01-01, 2100-01-01])");
            continue;
        }
        if (j.contains("meta")) {
            if (!j["meta"].is_object()) {
                fail("\"meta\" is not an object");
                continue;
            }
            bool ok = true;
            for (auto& [k, v] : j["meta"].items()) {
                if (!v.is_string()) {
                    fail("meta value for \"" + k + "\" is not a string");
                    ok = false;
                    break;
                }
                doc.meta.emplace(k, v.get<std::string>());
            }
            if (!ok) continue;
        }
        corpus.docs.push_back(std::move(doc));
        ++rep.lines_ok;
    }

    if (corpus.docs.empty()) {
        raise(Errc::empty_corpus, path.string() + ": no valid records" +
                                      (rep.errors.empty() ? "" : " (" + std::to_string(rep.errors.size()) +
                                                                     " invalid lines)"));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
    for (const Document& d : corpus.docs) {
        json j;
        j["id"] = d.id;
        j["text"] = d.text;
        j["date"] = d.date.to_string();
        j["meta"] = json::object();
        for (const auto& [k, v] : d.meta) j["meta"][k] = v;
        out << j.dump() << '\n';
    }
    if (!out) raise(Errc::io_error, "write failed: " + path.string());
}

const std::string* LookupTable::value(const std::string& key, const std::string& field) const {
    auto row = rows.find(key);
    if (row == rows.end()) return nullptr;
    for (std::size_t i = 0; i < value_fields.size(); ++i) {
        if (value_fields[i] == field) return &row->second[i];
    }
    return nullptr;
}

namespace {

// RFC 4180 style: fields separated by commas, optionally double-quoted with
// "" as the escape.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

LookupTable load_lookup_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path.string());

    LookupTable table;
    std::string line;
    if (!std::getline(in, line)) raise(Errc::malformed_record, path.string() + ": empty CSV");

    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2) raise(Errc::malformed_record, path.string() + ": CSV needs a key column and at least one value column");
    table.key_field = header[0];
    table.value_fields.assign(header.begin() + 1, header.end());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            raise(Errc::malformed_record,
                  path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        std::string key = fields[0];
        if (!table.rows.emplace(std::move(key), std::vector<std::string>(fields.begin() + 1, fields.end())).second) {
            raise(Errc::malformed_record,
                  path.string() + ":" + std::to_string(line_no) + ": duplicate key \"" + fields[0] + "\"");
        }
    }
    return table;
}

Predicate Predicate::parse(std::string_view spec) {
    static constexpr std::pair<std::string_view, Op> kOps[] = {
        {"<=", Op::le}, {">=", Op::ge}, {"!=", Op::ne}, {"==", Op::eq},
        {"<", Op::lt},  {">", Op::gt},  {"=", Op::eq},
    };
    for (auto [sym, op] : kOps) {
        auto pos = spec.find(sym);
        if (pos != std::string_view::npos) {
            Predicate p;
            p.field = trim(spec.substr(0, pos));
            p.op = op;
            p.value = trim(spec.substr(pos + sym.size()));
            if (p.field.empty()) raise(Errc::invalid_argument, "predicate has no field: '" + std::string(spec) + "'");
            return p;
        }
    }
    raise(Errc::invalid_argument, "predicate has no comparison operator: '" + std::string(spec) + "'");
}

namespace {

bool apply_op(Predicate::Op op, int cmp) {
    switch (op) {
        case Predicate::Op::lt: return cmp < 0;
        case Predicate::Op::le: return cmp <= 0;
        case Predicate::Op::eq: return cmp == 0;
        case Predicate::Op::ne: return cmp != 0;
        case Predicate::Op::ge: return cmp >= 0;
        case Predicate::Op::gt: return cmp > 0;
    }
    return false;
}

bool matches(const Document& doc, const Predicate& p) {
    if (p.field == "date") {
        Date rhs = Date::parse(p.value);
        int cmp = doc.date < rhs ? -1 : (doc.date == rhs ? 0 : 1);
        return apply_op(p.op, cmp);
    }
    const std::string* lhs = nullptr;
    if (p.field == "id") {
        lhs = &doc.id;
    } else if (p.field.starts_with("meta.")) {
        auto it = doc.meta.find(p.field.substr(5));
        if (it == doc.meta.end()) return false;
        lhs = &it->second;
    } else {
        raise(Errc::unknown_field, "predicate field must be \"date\", \"id\" or \"meta.<key>\": " + p.field);
    }
    double a = 0, b = 0;
    int cmp;
    if (parse_number(*lhs, a) && parse_number(p.value, b)) {
        cmp = a < b ? -1 : (a == b ? 0 : 1);
    } else {
        cmp = lhs->compare(p.value);
        cmp = cmp < 0 ? -1 : (cmp == 0 ? 0 : 1);
    }
    return apply_op(p.op, cmp);
}

}  // namespace

Corpus filter_corpus(const Corpus& corpus, const std::vector<Predicate>& predicates) {
    for (const Predicate& p : predicates) {
        if (p.field.starts_with("meta.")) {
            std::string key = p.field.substr(5);
            bool present = std::any_of(corpus.docs.begin(), corpus.docs.end(),
                                       [&](const Document& d) { return d.meta.count(key) > 0; });
            if (!present) raise(Errc::unknown_field, "meta key absent from every document: " + key);
        } else if (p.field != "date" && p.field != "id") {
            raise(Errc::unknown_field, "predicate field must be \"date\", \"id\" or \"meta.<key>\": " + p.field);
        }
    }

    Corpus out;
    out.source_label = corpus.source_label;
    for (const Document& d : corpus.docs) {
        bool keep = std::all_of(predicates.begin(), predicates.end(),
                                [&](const Predicate& p) { return matches(d, p); });
        if (keep) out.docs.push_back(d);
    }
    return out;
}

Corpus filter_corpus(const Corpus& corpus, const Predicate& predicate) {
    return filter_corpus(corpus, std::vector<Predicate>{predicate});
}

std::pair<Corpus, Corpus> split_by_date(const Corpus& corpus, Date cutoff) {
    Corpus before, after;
    before.source_label = corpus.source_label;
    after.source_label = corpus.source_label;
    for (const Document& d : corpus.docs) {
        (d.date < cutoff ? before : after).docs.push_back(d);
    }
    return {std::move(before), std::move(after)};
}

Corpus sample(const Corpus& corpus, std::size_t n_max, std::uint64_t seed) {
    if (n_max == 0) raise(Errc::invalid_argument, "sample n_max must be >= 1");
    if (corpus.size() <= n_max) return corpus;

    std::vector<std::size_t> keep = sample_indices(corpus.size(), n_max, seed);
    Corpus out;
    out.source_label = corpus.source_label;
    out.docs.reserve(keep.size());
    for (std::size_t i : keep) out.docs.push_back(corpus.docs[i]);
    return out;
}

Corpus join_lookup(const Corpus& corpus, const LookupTable& table, const std::string& doc_key,
                   const std::string& prefix) {
    const std::string dot_prefix = prefix + ".";
    for (const Document& d : corpus.docs) {
        for (const auto& [k, v] : d.meta) {
            if (k == prefix || k.starts_with(dot_prefix)) {
                raise(Errc::duplicate_meta_key,
                      "doc \"" + d.id + "\" already has meta key \"" + k + "\" under prefix \"" + prefix + "\"");
            }
        }
    }

    Corpus out = corpus;
    for (Document& d : out.docs) {
        auto key_it = d.meta.find(doc_key);
        const std::vector<std::string>* row = nullptr;
        if (key_it != d.meta.end()) {
            auto row_it = table.rows.find(key_it->second);
            if (row_it != table.rows.end()) row = &row_it->second;
        }
        if (row) {
            for (std::size_t i = 0; i < table.value_fields.size(); ++i) {
                d.meta[dot_prefix + table.value_fields[i]] = (*row)[i];
            }
        } else {
            d.meta[dot_prefix + "_matched"] = "false";
        }
    }
    return out;
}

}  // namespace llmfrac
