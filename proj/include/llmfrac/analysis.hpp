#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmfrac/corpus.hpp"
#include "llmfrac/estimator.hpp"
#include "llmfrac/model.hpp"

namespace llmfrac {

struct BucketSpec {
    enum class Granularity { month, quarter };

    Granularity granularity = Granularity::month;
    int n_max_per_bucket = 2000;
    int min_units_per_bucket = 50;

    void validate() const;
};

const char* granularity_name(BucketSpec::Granularity g) noexcept;
BucketSpec::Granularity granularity_from_name(std::string_view name);

struct TrendPoint {
    std::string bucket;  // "YYYY-MM" or "YYYYQn"
    EstimateResult estimate;
    std::size_t n_available = 0;
    std::size_t n_used = 0;
};

struct SkippedBucket {
    std::string bucket;
    std::size_t n_available = 0;
};

struct TrendSeries {
    std::vector<TrendPoint> points;  // bucket labels strictly increasing
    std::vector<SkippedBucket> skipped;
    std::map<std::string, std::string> stratum;  // annotations, e.g. {"highly_urbanized":"true"}
    FitConfig::Unit unit = FitConfig::Unit::document;

    nlohmann::json to_json() const;
};

/// Buckets docs by calendar month/quarter, samples each bucket down to
/// n_max (child seed per bucket label), and bootstraps alpha per bucket.
/// Buckets under min_units are listed in skipped. Each bucket's result
/// depends only on (seed, bucket label, bucket docs).
TrendSeries trend(const TokenModel& model, const Corpus& corpus, const BucketSpec& spec,
                  int n_bootstrap, std::uint64_t seed);

/// Declarative stratification rule. `name` is the derived meta key the rule
/// writes; factory helpers fill in the conventional names.
struct StratumRule {
    enum class Kind {
        ruca_binary,                // params: code_key          -> "true" iff code <= 3
        education_vs_state_median,  // params: value_key, state_key, weight "lookup:<name>"...
        employees_threshold,        // params: key, threshold    -> "true" iff value <= threshold
        vacancies_threshold,        // params: key, threshold    -> "true" iff value <= threshold
        founding_cohort,            // params: key -> post2015 | 2000_2015 | 1980_2000 | pre1980
        meta_equals,                // params: key, value        -> "true"/"false"
    };

    std::string name;
    Kind kind;
    std::map<std::string, std::string> params;

    static StratumRule ruca_binary(std::string code_key);
    /// doc_key joins the doc to the lookup named `table`; value_field is the
    /// attainment column, state_field the state column. The state median is
    /// computed over all lookup rows, not over the docs.
    static StratumRule education_vs_state_median(std::string doc_key, std::string table,
                                                 std::string value_field, std::string state_field);
    static StratumRule employees_threshold(std::string key, int threshold = 10);
    static StratumRule vacancies_threshold(std::string key, int threshold = 2);
    static StratumRule founding_cohort(std::string key);
    static StratumRule meta_equals(std::string name, std::string key, std::string value);
};

struct StratumFailure {
    std::string doc_id;
    std::string rule;
    std::string reason;
};

/// Adds each rule's derived meta key; docs missing a required field are
/// left without the key and reported. Text, date, id and doc order are
/// never touched. lookups maps table names referenced by rules (currently
/// only education_vs_state_median) to loaded tables.
Corpus derive_strata(const Corpus& corpus, const std::vector<StratumRule>& rules,
                     const std::map<std::string, LookupTable>& lookups = {},
                     std::vector<StratumFailure>* failures = nullptr);

/// One TrendSeries per distinct value of the groupby meta key; docs missing
/// the key fall into group "_missing". Per-group child seeds keep groups
/// independent.
std::map<std::string, TrendSeries> stratified_trend(const TokenModel& model, const Corpus& corpus,
                                                    const std::string& groupby,
                                                    const BucketSpec& spec, int n_bootstrap,
                                                    std::uint64_t seed);

enum class ReportFormat { csv, json };
ReportFormat report_format_from_name(std::string_view name);

/// Long-format export: bucket,stratum,alpha,ci_low,ci_high,n_used. Skipped
/// buckets go to a "<path>.skipped.json" sidecar when present.
void export_report(const TrendSeries& series, ReportFormat format,
                   const std::filesystem::path& path);
void export_report(const std::map<std::string, TrendSeries>& by_group, ReportFormat format,
                   const std::filesystem::path& path);

}  // namespace llmfrac
