#include "llmfrac/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "llmfrac/errors.hpp"
#include "llmfrac/kernels.hpp"

namespace llmfrac {

using nlohmann::json;

void FitConfig::validate() const {
    if (min_df < 1) raise(Errc::invalid_argument, "min_df must be >= 1");
    if (max_vocab < 1) raise(Errc::invalid_argument, "max_vocab must be >= 1");
    if (smoothing_beta < 0) raise(Errc::invalid_argument, "smoothing_beta must be >= 0");
    if (!(clamp_epsilon > 0 && clamp_epsilon <= 0.01)) {
        raise(Errc::invalid_argument, "clamp_epsilon must be in (0, 0.01]");
    }
    if (min_docs < 2) raise(Errc::invalid_argument, "min_docs must be >= 2");
}

const char* unit_name(FitConfig::Unit u) noexcept {
    return u == FitConfig::Unit::document ? "document" : "sentence";
}

FitConfig::Unit unit_from_name(std::string_view name) {
    if (name == "document") return FitConfig::Unit::document;
    if (name == "sentence") return FitConfig::Unit::sentence;
    raise(Errc::invalid_argument, "unit must be \"document\" or \"sentence\", got \"" + std::string(name) + "\"");
}

std::vector<std::string> unit_texts(const Document& doc, FitConfig::Unit unit) {
    if (unit == FitConfig::Unit::document) return {doc.text};
    return segment_sentences(doc.text);
}

TokenModel::TokenModel(Vocabulary vocab, std::vector<double> p, std::vector<double> q,
                       FitConfig config, ModelProvenance provenance)
    : vocab_(std::move(vocab)),
      p_(std::move(p)),
      q_(std::move(q)),
      config_(std::move(config)),
      provenance_(std::move(provenance)) {
    if (p_.size() != vocab_.size() || q_.size() != vocab_.size()) {
        raise(Errc::invalid_argument, "probability arrays must match vocabulary size");
    }
    for (double v : p_) {
        if (!(v > 0.0 && v < 1.0)) raise(Errc::invalid_argument, "p entries must lie strictly in (0,1)");
    }
    for (double v : q_) {
        if (!(v > 0.0 && v < 1.0)) raise(Errc::invalid_argument, "q entries must lie strictly in (0,1)");
    }
    rebuild_tables();
}

void TokenModel::rebuild_tables() {
    const std::size_t n = vocab_.size();
    wp_.resize(n);
    wq_.resize(n);
    std::vector<double> log1m_p(n), log1m_q(n);
    for (std::size_t t = 0; t < n; ++t) {
        log1m_p[t] = std::log1p(-p_[t]);
        log1m_q[t] = std::log1p(-q_[t]);
        wp_[t] = std::log(p_[t]) - log1m_p[t];
        wq_[t] = std::log(q_[t]) - log1m_q[t];
    }
    const auto& k = kernels::active();
    base_p_ = k.sum(log1m_p.data(), n);
    base_q_ = k.sum(log1m_q.data(), n);
}

namespace {

struct DfCounts {
    // token -> units containing it; deterministic output is restored by
    // sorting before any ordering decision
    std::unordered_map<std::string, std::int64_t> df;
    std::int64_t n_units = 0;
};

DfCounts count_unit_frequencies(const Corpus& corpus, FitConfig::Unit unit) {
    DfCounts out;
    std::vector<std::string> seen;
    for (const Document& doc : corpus.docs) {
        for (const std::string& u : unit_texts(doc, unit)) {
            ++out.n_units;
            seen = tokenize(u);
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (std::string& tok : seen) ++out.df[std::move(tok)];
        }
    }
    return out;
}

std::int64_t count_units(const Corpus& corpus, FitConfig::Unit unit) {
    if (unit == FitConfig::Unit::document) return static_cast<std::int64_t>(corpus.size());
    std::int64_t n = 0;
    for (const Document& doc : corpus.docs) {
        n += static_cast<std::int64_t>(segment_sentences(doc.text).size());
    }
    return n;
}

}  // namespace

Vocabulary build_vocabulary(const Corpus& human, const Corpus& llm, const FitConfig& cfg) {
    cfg.validate();
    if (human.empty() || llm.empty()) raise(Errc::empty_corpus, "build_vocabulary needs non-empty corpora");

    DfCounts h = count_unit_frequencies(human, cfg.unit);
    DfCounts l = count_unit_frequencies(llm, cfg.unit);

    struct Entry {
        std::int64_t combined_df;
        std::string token;
    };
    std::vector<Entry> eligible;
    for (const auto& [tok, df_h] : h.df) {
        if (df_h < cfg.min_df) continue;
        auto it = l.df.find(tok);
        if (it == l.df.end() || it->second < cfg.min_df) continue;
        eligible.push_back({df_h + it->second, tok});
    }
    if (eligible.empty()) {
        raise(Errc::empty_vocabulary, "no token reaches min_df=" + std::to_string(cfg.min_df) +
                                          " in both corpora");
    }

    std::sort(eligible.begin(), eligible.end(), [](const Entry& a, const Entry& b) {
        if (a.combined_df != b.combined_df) return a.combined_df > b.combined_df;
        return a.token < b.token;
    });
    if (eligible.size() > static_cast<std::size_t>(cfg.max_vocab)) {
        eligible.resize(static_cast<std::size_t>(cfg.max_vocab));
    }

    std::vector<std::string> tokens;
    tokens.reserve(eligible.size());
    for (Entry& e : eligible) tokens.push_back(std::move(e.token));
    return Vocabulary::from_tokens(std::move(tokens));
}

std::vector<double> estimate_occurrence_probs(const Corpus& corpus, const Vocabulary& vocab,
                                              const FitConfig& cfg) {
    cfg.validate();
    const std::int64_t n_units = count_units(corpus, cfg.unit);
    if (n_units < cfg.min_docs) {
        raise(Errc::too_few_documents, "corpus has " + std::to_string(n_units) + " units, need " +
                                           std::to_string(cfg.min_docs));
    }

    std::vector<std::int64_t> df(vocab.size(), 0);
    for (const Document& doc : corpus.docs) {
        for (const std::string& u : unit_texts(doc, cfg.unit)) {
            for (std::int32_t slot : present_slots(u, vocab)) ++df[static_cast<std::size_t>(slot)];
        }
    }

    const double beta = cfg.smoothing_beta;
    const double denom = static_cast<double>(n_units) + 2.0 * beta;
    const double eps = cfg.clamp_epsilon;
    std::vector<double> probs(vocab.size());
    for (std::size_t t = 0; t < vocab.size(); ++t) {
        double v = (static_cast<double>(df[t]) + beta) / denom;
        probs[t] = std::clamp(v, eps, 1.0 - eps);
    }
    return probs;
}

namespace {

void date_range(const Corpus& corpus, std::string& lo, std::string& hi) {
    Date min_d = corpus.docs.front().date;
    Date max_d = min_d;
    for (const Document& d : corpus.docs) {
        min_d = std::min(min_d, d.date);
        max_d = std::max(max_d, d.date);
    }
    lo = min_d.to_string();
    hi = max_d.to_string();
}

}  // namespace

TokenModel fit(const Corpus& human, const Corpus& llm, const FitConfig& cfg) {
    cfg.validate();
    Vocabulary vocab = build_vocabulary(human, llm, cfg);
    std::vector<double> p = estimate_occurrence_probs(human, vocab, cfg);
    std::vector<double> q = estimate_occurrence_probs(llm, vocab, cfg);

    ModelProvenance prov;
    prov.human_label = human.source_label;
    prov.llm_label = llm.source_label;
    prov.human_docs = human.size();
    prov.llm_docs = llm.size();
    prov.human_units = static_cast<std::size_t>(count_units(human, cfg.unit));
    prov.llm_units = static_cast<std::size_t>(count_units(llm, cfg.unit));
    date_range(human, prov.human_date_min, prov.human_date_max);
    date_range(llm, prov.llm_date_min, prov.llm_date_max);
    prov.train_ids.reserve(human.size() + llm.size());
    for (const Document& d : human.docs) prov.train_ids.push_back(d.id);
    for (const Document& d : llm.docs) prov.train_ids.push_back(d.id);
    std::sort(prov.train_ids.begin(), prov.train_ids.end());
    prov.train_ids.erase(std::unique(prov.train_ids.begin(), prov.train_ids.end()),
                         prov.train_ids.end());

    return TokenModel(std::move(vocab), std::move(p), std::move(q), cfg, std::move(prov));
}

namespace {

constexpr int kSchemaVersion = 1;

json config_to_json(const FitConfig& cfg) {
    return json{{"unit", unit_name(cfg.unit)},
                {"min_df", cfg.min_df},
                {"max_vocab", cfg.max_vocab},
                {"smoothing_beta", cfg.smoothing_beta},
                {"clamp_epsilon", cfg.clamp_epsilon},
                {"min_docs", cfg.min_docs}};
}

FitConfig config_from_json(const json& j) {
    FitConfig cfg;
    cfg.unit = unit_from_name(j.at("unit").get<std::string>());
    cfg.min_df = j.at("min_df").get<int>();
    cfg.max_vocab = j.at("max_vocab").get<int>();
    cfg.smoothing_beta = j.at("smoothing_beta").get<double>();
    cfg.clamp_epsilon = j.at("clamp_epsilon").get<double>();
    cfg.min_docs = j.at("min_docs").get<int>();
    return cfg;
}

}  // namespace

void save_model(const TokenModel& model, const std::filesystem::path& path) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config_to_json(model.config());
    j["vocab"] = model.vocab().tokens();
    j["p"] = model.p();
    j["q"] = model.q();
    const ModelProvenance& prov = model.provenance();
    j["provenance"] = json{{"human_label", prov.human_label},
                           {"llm_label", prov.llm_label},
                           {"human_docs", prov.human_docs},
                           {"llm_docs", prov.llm_docs},
                           {"human_units", prov.human_units},
                           {"llm_units", prov.llm_units},
                           {"human_date_min", prov.human_date_min},
                           {"human_date_max", prov.human_date_max},
                           {"llm_date_min", prov.llm_date_min},
                           {"llm_date_max", prov.llm_date_max},
                           {"train_ids", prov.train_ids}};

    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) raise(Errc::io_error, "write failed: " + path.string());
}

TokenModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) raise(Errc::corrupt_model, path.string() + ": not valid JSON");

    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        raise(Errc::corrupt_model, path.string() + ": missing schema_version");
    }
    int version = j["schema_version"].get<int>();
    if (version != kSchemaVersion) {
        raise(Errc::schema_version_mismatch, path.string() + ": schema_version " +
                                                 std::to_string(version) + ", supported: " +
                                                 std::to_string(kSchemaVersion));
    }

    try {
        FitConfig cfg = config_from_json(j.at("config"));
        cfg.validate();
        auto tokens = j.at("vocab").get<std::vector<std::string>>();
        auto p = j.at("p").get<std::vector<double>>();
        auto q = j.at("q").get<std::vector<double>>();
        if (p.size() != tokens.size() || q.size() != tokens.size()) {
            raise(Errc::corrupt_model, path.string() + ": vocab/p/q sizes disagree");
        }
        const json& pj = j.at("provenance");
        ModelProvenance prov;
        prov.human_label = pj.at("human_label").get<std::string>();
        prov.llm_label = pj.at("llm_label").get<std::string>();
        prov.human_docs = pj.at("human_docs").get<std::size_t>();
        prov.llm_docs = pj.at("llm_docs").get<std::size_t>();
        prov.human_units = pj.at("human_units").get<std::size_t>();
        prov.llm_units = pj.at("llm_units").get<std::size_t>();
        prov.human_date_min = pj.at("human_date_min").get<std::string>();
        prov.human_date_max = pj.at("human_date_max").get<std::string>();
        prov.llm_date_min = pj.at("llm_date_min").get<std::string>();
        prov.llm_date_max = pj.at("llm_date_max").get<std::string>();
        prov.train_ids = pj.at("train_ids").get<std::vector<std::string>>();
        return TokenModel(Vocabulary::from_tokens(std::move(tokens)), std::move(p), std::move(q),
                          cfg, std::move(prov));
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        raise(Errc::corrupt_model, path.string() + ": " + e.what());
    }
}

std::pair<double, double> unit_log_likelihoods(const TokenModel& model, std::string_view unit_text) {
    return unit_log_likelihoods_from_slots(model, present_slots(unit_text, model.vocab()));
}

std::pair<double, double> unit_log_likelihoods_from_slots(const TokenModel& model,
                                                          const std::vector<std::int32_t>& slots) {
    double a = model.base_p();
    double b = model.base_q();
    kernels::active().pair_gather_sum(slots.data(), slots.size(), model.wp().data(),
                                      model.wq().data(), &a, &b);
    return {a, b};
}

}  // namespace llmfrac
