#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmfrac/date.hpp"

namespace llmfrac {

/// One text record. id is unique within a corpus, text is non-empty after
/// trimming, meta holds free-form string attributes (state, zip, category,
/// employees, founded, ...).
struct Document {
    std::string id;
    std::string text;
    Date date;
    std::map<std::string, std::string> meta;
};

/// Immutable after construction; operations return new values. Document
/// order is the load order unless an operation documents its own rule.
struct Corpus {
    std::vector<Document> docs;
    std::string source_label;

    std::size_t size() const noexcept { return docs.size(); }
    bool empty() const noexcept { return docs.empty(); }
};

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct LoadReport {
    std::vector<LineError> errors;
    std::size_t lines_total = 0;
    std::size_t lines_ok = 0;
};

/// Reads a JSONL file with records {"id","text","date","meta"}. Invalid lines
/// are collected in the report and skipped; throws Error(empty_corpus) when
/// nothing loads, Error(file_not_found) when the path does not exist.
Corpus load_corpus(const std::filesystem::path& path, LoadReport* report = nullptr);

/// Serializes docs one JSON object per line, preserving order.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Keyed auxiliary table (e.g. ZIP -> RUCA code) loaded from CSV with a
/// header row; the first column is the key.
struct LookupTable {
    std::string key_field;
    std::vector<std::string> value_fields;
    std::map<std::string, std::vector<std::string>> rows;  // key -> values (aligned with value_fields)

    const std::string* value(const std::string& key, const std::string& field) const;
};

LookupTable load_lookup_csv(const std::filesystem::path& path);

/// Comparison against a document field ("date", "id") or a meta key
/// ("meta.employees"). Ordered comparisons on meta values are numeric when
/// both sides parse as numbers, lexicographic otherwise; date comparisons
/// are calendar comparisons.
struct Predicate {
    enum class Op { lt, le, eq, ne, ge, gt };
    std::string field;
    Op op = Op::eq;
    std::string value;

    /// Parses "field<=value" with operators <=, >=, !=, ==, <, >, =.
    static Predicate parse(std::string_view spec);
};

/// Order-preserving subsequence of docs matching all predicates. Throws
/// Error(unknown_field) when a referenced meta key appears on no document.
/// Docs missing a referenced meta key simply do not match.
Corpus filter_corpus(const Corpus& corpus, const std::vector<Predicate>& predicates);
Corpus filter_corpus(const Corpus& corpus, const Predicate& predicate);

/// (docs with date < cutoff, docs with date >= cutoff), both order-preserving.
std::pair<Corpus, Corpus> split_by_date(const Corpus& corpus, Date cutoff);

/// Uniform without-replacement sample of at most n_max docs, deterministic
/// given the seed, returned in original position order. Identity when the
/// corpus already fits.
Corpus sample(const Corpus& corpus, std::size_t n_max, std::uint64_t seed);

/// Adds "<prefix>.<field>" meta entries from the table row keyed by
/// meta[doc_key]; unmatched docs get "<prefix>._matched" = "false". Throws
/// Error(duplicate_meta_key) if the prefix collides with existing meta.
Corpus join_lookup(const Corpus& corpus, const LookupTable& table, const std::string& doc_key,
                   const std::string& prefix);

}  // namespace llmfrac
