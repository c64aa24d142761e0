#include "llmfrac/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "llmfrac/errors.hpp"
#include "llmfrac/parallel.hpp"
#include "llmfrac/rng.hpp"

namespace llmfrac {

using nlohmann::json;

void BucketSpec::validate() const {
    if (min_units_per_bucket < 1) raise(Errc::invalid_argument, "min_units_per_bucket must be >= 1");
    if (n_max_per_bucket < min_units_per_bucket) {
        raise(Errc::invalid_argument, "n_max_per_bucket must be >= min_units_per_bucket");
    }
}

const char* granularity_name(BucketSpec::Granularity g) noexcept {
    return g == BucketSpec::Granularity::month ? "month" : "quarter";
}

BucketSpec::Granularity granularity_from_name(std::string_view name) {
    if (name == "month") return BucketSpec::Granularity::month;
    if (name == "quarter") return BucketSpec::Granularity::quarter;
    raise(Errc::invalid_argument, "granularity must be \"month\" or \"quarter\", got \"" +
                                      std::string(name) + "\"");
}

json TrendSeries::to_json() const {
    json pts = json::array();
    for (const TrendPoint& p : points) {
        pts.push_back(json{{"bucket", p.bucket},
                           {"estimate", p.estimate.to_json()},
                           {"n_available", p.n_available},
                           {"n_used", p.n_used}});
    }
    json skip = json::array();
    for (const SkippedBucket& s : skipped) {
        skip.push_back(json{{"bucket", s.bucket}, {"n_available", s.n_available}});
    }
    json strat = json::object();
    for (const auto& [k, v] : stratum) strat[k] = v;
    return json{{"points", pts}, {"skipped", skip}, {"stratum", strat}, {"unit", unit_name(unit)}};
}

TrendSeries trend(const TokenModel& model, const Corpus& corpus, const BucketSpec& spec,
                  int n_bootstrap, std::uint64_t seed) {
    spec.validate();
    if (corpus.empty()) raise(Errc::empty_corpus, "trend on an empty corpus");

    std::map<std::string, std::vector<std::size_t>> buckets;  // label -> doc positions
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Date& d = corpus.docs[i].date;
        std::string label = spec.granularity == BucketSpec::Granularity::month
                                ? d.month_label()
                                : d.quarter_label();
        buckets[label].push_back(i);
    }

    TrendSeries series;
    series.unit = model.config().unit;

    struct Job {
        std::string label;
        const std::vector<std::size_t>* members;
    };
    std::vector<Job> jobs;
    for (const auto& [label, members] : buckets) {
        if (members.size() < static_cast<std::size_t>(spec.min_units_per_bucket)) {
            series.skipped.push_back({label, members.size()});
        } else {
            jobs.push_back({label, &members});
        }
    }

    std::vector<TrendPoint> points(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t j) {
        const Job& job = jobs[j];
        const std::uint64_t bucket_seed = derive_seed(seed, job.label);

        Corpus bucket;
        bucket.source_label = corpus.source_label + "@" + job.label;
        for (std::size_t i : *job.members) bucket.docs.push_back(corpus.docs[i]);
        Corpus used = sample(bucket, static_cast<std::size_t>(spec.n_max_per_bucket),
                             derive_seed(bucket_seed, "sample"));

        TrendPoint& point = points[j];
        point.bucket = job.label;
        point.n_available = job.members->size();
        point.n_used = used.size();
        point.estimate = bootstrap_ci(model, used, n_bootstrap, 0.95,
                                      derive_seed(bucket_seed, "bootstrap"));
    });
    series.points = std::move(points);
    return series;
}

StratumRule StratumRule::ruca_binary(std::string code_key) {
    return {"highly_urbanized", Kind::ruca_binary, {{"code_key", std::move(code_key)}}};
}

StratumRule StratumRule::education_vs_state_median(std::string doc_key, std::string table,
                                                   std::string value_field,
                                                   std::string state_field) {
    return {"above_median",
            Kind::education_vs_state_median,
            {{"doc_key", std::move(doc_key)},
             {"table", std::move(table)},
             {"value_field", std::move(value_field)},
             {"state_field", std::move(state_field)}}};
}

StratumRule StratumRule::employees_threshold(std::string key, int threshold) {
    return {"small_firm",
            Kind::employees_threshold,
            {{"key", std::move(key)}, {"threshold", std::to_string(threshold)}}};
}

StratumRule StratumRule::vacancies_threshold(std::string key, int threshold) {
    return {"small_firm",
            Kind::vacancies_threshold,
            {{"key", std::move(key)}, {"threshold", std::to_string(threshold)}}};
}

StratumRule StratumRule::founding_cohort(std::string key) {
    return {"cohort", Kind::founding_cohort, {{"key", std::move(key)}}};
}

StratumRule StratumRule::meta_equals(std::string name, std::string key, std::string value) {
    return {std::move(name), Kind::meta_equals, {{"key", std::move(key)}, {"value", std::move(value)}}};
}

namespace {

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc{} && ptr == e;
}

const std::string& require_param(const StratumRule& rule, const std::string& key) {
    auto it = rule.params.find(key);
    if (it == rule.params.end()) {
        raise(Errc::invalid_argument, "rule \"" + rule.name + "\" missing param \"" + key + "\"");
    }
    return it->second;
}

// Median of per-state lookup values: odd count takes the middle value, even
// count the mean of the two middle values.
std::map<std::string, double> state_medians(const LookupTable& table, const std::string& value_field,
                                            const std::string& state_field) {
    std::size_t value_idx = table.value_fields.size(), state_idx = table.value_fields.size();
    for (std::size_t i = 0; i < table.value_fields.size(); ++i) {
        if (table.value_fields[i] == value_field) value_idx = i;
        if (table.value_fields[i] == state_field) state_idx = i;
    }
    if (value_idx >= table.value_fields.size() || state_idx >= table.value_fields.size()) {
        raise(Errc::unknown_field, "lookup lacks field \"" + value_field + "\" or \"" + state_field + "\"");
    }

    std::map<std::string, std::vector<double>> by_state;
    for (const auto& [key, row] : table.rows) {
        double v;
        if (parse_double(row[value_idx], v)) by_state[row[state_idx]].push_back(v);
    }
    std::map<std::string, double> medians;
    for (auto& [state, values] : by_state) {
        std::sort(values.begin(), values.end());
        std::size_t n = values.size();
        medians[state] = (n % 2 == 1) ? values[n / 2]
                                      : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    }
    return medians;
}

}  // namespace

Corpus derive_strata(const Corpus& corpus, const std::vector<StratumRule>& rules,
                     const std::map<std::string, LookupTable>& lookups,
                     std::vector<StratumFailure>* failures) {
    Corpus out = corpus;
    std::vector<StratumFailure> local;
    std::vector<StratumFailure>& fails = failures ? *failures : local;

    for (const StratumRule& rule : rules) {
        // Per-rule setup for education medians
        std::map<std::string, double> medians;
        std::size_t edu_value_idx = 0, edu_state_idx = 0;
        const LookupTable* edu_table = nullptr;
        if (rule.kind == StratumRule::Kind::education_vs_state_median) {
            const std::string& table_name = require_param(rule, "table");
            auto it = lookups.find(table_name);
            if (it == lookups.end()) {
                raise(Errc::invalid_argument, "lookup table \"" + table_name + "\" not provided");
            }
            edu_table = &it->second;
            const std::string& value_field = require_param(rule, "value_field");
            const std::string& state_field = require_param(rule, "state_field");
            medians = state_medians(*edu_table, value_field, state_field);
            for (std::size_t i = 0; i < edu_table->value_fields.size(); ++i) {
                if (edu_table->value_fields[i] == value_field) edu_value_idx = i;
                if (edu_table->value_fields[i] == state_field) edu_state_idx = i;
            }
        }

        for (Document& doc : out.docs) {
            auto missing = [&](const std::string& what) {
                fails.push_back({doc.id, rule.name, what});
            };
            auto meta_value = [&](const std::string& key) -> const std::string* {
                auto it = doc.meta.find(key);
                return it == doc.meta.end() ? nullptr : &it->second;
            };

            switch (rule.kind) {
                case StratumRule::Kind::ruca_binary: {
                    const std::string* code = meta_value(require_param(rule, "code_key"));
                    double v;
                    if (!code) { missing("missing RUCA code"); break; }
                    if (!parse_double(*code, v)) { missing("RUCA code not numeric: " + *code); break; }
                    // primary codes 1-3 are metropolitan
                    doc.meta[rule.name] = std::floor(v) <= 3.0 ? "true" : "false";
                    break;
                }
                case StratumRule::Kind::education_vs_state_median: {
                    const std::string* key = meta_value(require_param(rule, "doc_key"));
                    if (!key) { missing("missing lookup key"); break; }
                    auto row = edu_table->rows.find(*key);
                    if (row == edu_table->rows.end()) { missing("key not in lookup: " + *key); break; }
                    double v;
                    if (!parse_double(row->second[edu_value_idx], v)) {
                        missing("attainment not numeric");
                        break;
                    }
                    auto med = medians.find(row->second[edu_state_idx]);
                    if (med == medians.end()) { missing("state has no median"); break; }
                    doc.meta[rule.name] = v > med->second ? "true" : "false";
                    break;
                }
                case StratumRule::Kind::employees_threshold:
                case StratumRule::Kind::vacancies_threshold: {
                    const std::string* raw = meta_value(require_param(rule, "key"));
                    double v = 0, threshold = 0;
                    if (!parse_double(require_param(rule, "threshold"), threshold)) {
                        raise(Errc::invalid_argument,
                              "rule \"" + rule.name + "\" has a non-numeric threshold");
                    }
                    if (!raw) { missing("missing count field"); break; }
                    if (!parse_double(*raw, v)) { missing("count not numeric: " + *raw); break; }
                    doc.meta[rule.name] = v <= threshold ? "true" : "false";  // inclusive
                    break;
                }
                case StratumRule::Kind::founding_cohort: {
                    const std::string* raw = meta_value(require_param(rule, "key"));
                    double v;
                    if (!raw) { missing("missing founding year"); break; }
                    if (!parse_double(*raw, v)) { missing("founding year not numeric: " + *raw); break; }
                    const char* cohort = v >= 2015.0   ? "post2015"
                                         : v >= 2000.0 ? "2000_2015"
                                         : v >= 1980.0 ? "1980_2000"
                                                       : "pre1980";
                    doc.meta[rule.name] = cohort;
                    break;
                }
                case StratumRule::Kind::meta_equals: {
                    const std::string* raw = meta_value(require_param(rule, "key"));
                    if (!raw) { missing("missing meta key"); break; }
                    doc.meta[rule.name] = (*raw == require_param(rule, "value")) ? "true" : "false";
                    break;
                }
            }
        }
    }
    return out;
}

std::map<std::string, TrendSeries> stratified_trend(const TokenModel& model, const Corpus& corpus,
                                                    const std::string& groupby,
                                                    const BucketSpec& spec, int n_bootstrap,
                                                    std::uint64_t seed) {
    if (corpus.empty()) raise(Errc::empty_corpus, "stratified_trend on an empty corpus");

    std::map<std::string, Corpus> groups;
    for (const Document& doc : corpus.docs) {
        auto it = doc.meta.find(groupby);
        const std::string& group = it == doc.meta.end() ? std::string("_missing") : it->second;
        Corpus& g = groups[group];
        if (g.source_label.empty()) g.source_label = corpus.source_label + "[" + group + "]";
        g.docs.push_back(doc);
    }

    std::map<std::string, TrendSeries> out;
    for (const auto& [group, sub] : groups) {
        TrendSeries series = trend(model, sub, spec, n_bootstrap, derive_seed(seed, group));
        series.stratum[groupby] = group;
        out.emplace(group, std::move(series));
    }
    return out;
}

ReportFormat report_format_from_name(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "json") return ReportFormat::json;
    raise(Errc::invalid_argument, "format must be \"csv\" or \"json\", got \"" + std::string(name) + "\"");
}

namespace {

std::string stratum_label(const std::map<std::string, std::string>& stratum) {
    std::string label;
    for (const auto& [k, v] : stratum) {
        if (!label.empty()) label.push_back(';');
        label += k + "=" + v;
    }
    return label;
}

void write_csv_rows(std::ofstream& out, const TrendSeries& series) {
    const std::string label = stratum_label(series.stratum);
    char line[256];
    for (const TrendPoint& p : series.points) {
        std::snprintf(line, sizeof(line), ",%.12g,%.12g,%.12g,%zu\n", p.estimate.alpha_hat,
                      p.estimate.ci_low, p.estimate.ci_high, p.n_used);
        out << p.bucket << ',' << label << line;
    }
}

void write_skipped_sidecar(const std::vector<SkippedBucket>& skipped,
                           const std::filesystem::path& path) {
    if (skipped.empty()) return;
    json j = json::array();
    for (const SkippedBucket& s : skipped) {
        j.push_back(json{{"bucket", s.bucket}, {"n_available", s.n_available}});
    }
    std::filesystem::path sidecar = path;
    sidecar += ".skipped.json";
    std::ofstream out(sidecar);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + sidecar.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void export_report(const TrendSeries& series, ReportFormat format,
                   const std::filesystem::path& path) {
    if (format == ReportFormat::json) {
        std::ofstream out(path);
        if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
        out << series.to_json().dump(2) << '\n';
        if (!out) raise(Errc::io_error, "write failed: " + path.string());
        return;
    }
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
    out << "bucket,stratum,alpha,ci_low,ci_high,n_used\n";
    write_csv_rows(out, series);
    if (!out) raise(Errc::io_error, "write failed: " + path.string());
    write_skipped_sidecar(series.skipped, path);
}

void export_report(const std::map<std::string, TrendSeries>& by_group, ReportFormat format,
                   const std::filesystem::path& path) {
    if (format == ReportFormat::json) {
        json j = json::object();
        for (const auto& [group, series] : by_group) j[group] = series.to_json();
        std::ofstream out(path);
        if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
        out << j.dump(2) << '\n';
        if (!out) raise(Errc::io_error, "write failed: " + path.string());
        return;
    }
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
    out << "bucket,stratum,alpha,ci_low,ci_high,n_used\n";
    std::vector<SkippedBucket> all_skipped;
    for (const auto& [group, series] : by_group) {
        write_csv_rows(out, series);
        all_skipped.insert(all_skipped.end(), series.skipped.begin(), series.skipped.end());
    }
    if (!out) raise(Errc::io_error, "write failed: " + path.string());
    write_skipped_sidecar(all_skipped, path);
}

}  // namespace llmfrac
