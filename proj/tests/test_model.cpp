#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "llmfrac/errors.hpp"
#include "llmfrac/model.hpp"
#include "support.hpp"

using namespace llmfrac;

namespace {

Corpus corpus_of(const std::vector<std::string>& texts, const std::string& prefix) {
    Corpus c;
    c.source_label = prefix;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        c.docs.push_back({prefix + std::to_string(i), texts[i], {2021, 3, 1}, {}});
    }
    return c;
}

FitConfig toy_config() {
    FitConfig cfg;
    cfg.min_df = 1;
    cfg.min_docs = 2;
    cfg.smoothing_beta = 0.0;
    return cfg;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("build_vocabulary: token must reach min_df in each corpus") {
    Corpus human = corpus_of({"shared rare", "shared", "shared", "shared", "shared",
                              "shared", "shared", "shared", "shared", "shared"},
                             "h");
    Corpus llm = corpus_of({"shared", "shared", "shared", "shared", "shared", "shared",
                            "shared", "shared", "shared", "shared"},
                           "l");
    Vocabulary v = build_vocabulary(human, llm, toy_config());
    CHECK(v.size() == 1);  // "rare" appears in human only
    CHECK(v.token(0) == "shared");
}

TEST_CASE("build_vocabulary: canonical order and truncation") {
    // "bb" in every doc, "aa" and "cc" in half; combined df breaks by lex order
    Corpus human = corpus_of({"bb aa", "bb cc", "bb aa", "bb cc"}, "h");
    Corpus llm = corpus_of({"bb cc", "bb aa", "bb cc", "bb aa"}, "l");
    FitConfig cfg = toy_config();
    Vocabulary v = build_vocabulary(human, llm, cfg);
    REQUIRE(v.size() == 3);
    CHECK(v.token(0) == "bb");  // df 8
    CHECK(v.token(1) == "aa");  // df 4, lex before cc
    CHECK(v.token(2) == "cc");

    cfg.max_vocab = 2;
    Vocabulary top = build_vocabulary(human, llm, cfg);
    REQUIRE(top.size() == 2);
    CHECK(top.token(0) == "bb");
    CHECK(top.token(1) == "aa");
}

TEST_CASE("build_vocabulary: disjoint token sets is EmptyVocabulary") {
    Corpus human = corpus_of({"one two", "one two"}, "h");
    Corpus llm = corpus_of({"three four", "three four"}, "l");
    CHECK_THROWS_WITH_AS(build_vocabulary(human, llm, toy_config()),
                         doctest::Contains("EmptyVocabulary"), Error);
}

TEST_CASE("estimate_occurrence_probs: exact formula values") {
    Vocabulary v = Vocabulary::from_tokens({"tok"});

    FitConfig cfg = toy_config();
    cfg.smoothing_beta = 0.5;
    // df=1, N=2, beta=0.5 -> 1.5/3 = 0.5
    Corpus two = corpus_of({"tok here", "other"}, "a");
    auto probs = estimate_occurrence_probs(two, v, cfg);
    CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-15));

    // df=0, N=100, beta=0.5 -> 0.5/101
    std::vector<std::string> texts(100, "other");
    auto probs2 = estimate_occurrence_probs(corpus_of(texts, "b"), v, cfg);
    CHECK(probs2[0] == doctest::Approx(0.5 / 101.0).epsilon(1e-12));

    // df=0, beta=0 -> clamped to epsilon
    cfg.smoothing_beta = 0.0;
    auto probs3 = estimate_occurrence_probs(corpus_of(texts, "c"), v, cfg);
    CHECK(probs3[0] == cfg.clamp_epsilon);
}

TEST_CASE("estimate_occurrence_probs: monotone in df for beta > 0") {
    Vocabulary v = Vocabulary::from_tokens({"high", "low"});
    FitConfig cfg = toy_config();
    cfg.smoothing_beta = 0.5;
    // "high" in 7/10 units, "low" in 2/10
    std::vector<std::string> texts;
    for (int i = 0; i < 10; ++i) {
        std::string t = i < 7 ? "high" : "pad";
        if (i < 2) t += " low";
        texts.push_back(t);
    }
    auto probs = estimate_occurrence_probs(corpus_of(texts, "m"), v, cfg);
    CHECK(probs[0] > probs[1]);
    CHECK(probs[0] == doctest::Approx(7.5 / 11.0).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(2.5 / 11.0).epsilon(1e-12));
}

TEST_CASE("estimate_occurrence_probs: TooFewDocuments") {
    Vocabulary v = Vocabulary::from_tokens({"tok"});
    FitConfig cfg;
    cfg.min_docs = 100;
    Corpus small = corpus_of({"tok", "tok"}, "s");
    CHECK_THROWS_WITH_AS(estimate_occurrence_probs(small, v, cfg),
                         doctest::Contains("TooFewDocuments"), Error);
}

TEST_CASE("fit: toy probabilities and swap symmetry") {
    // token in 8/10 human docs, 2/10 llm docs, beta=0 -> p=0.8, q=0.2
    std::vector<std::string> human_texts, llm_texts;
    for (int i = 0; i < 10; ++i) {
        human_texts.push_back(i < 8 ? "tok filler" : "filler");
        llm_texts.push_back(i < 2 ? "tok filler" : "filler");
    }
    Corpus human = corpus_of(human_texts, "h");
    Corpus llm = corpus_of(llm_texts, "l");
    TokenModel m = fit(human, llm, toy_config());
    std::int32_t slot = m.vocab().slot_of("tok");
    REQUIRE(slot >= 0);
    CHECK(m.p()[slot] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(m.q()[slot] == doctest::Approx(0.2).epsilon(1e-15));

    TokenModel swapped = fit(llm, human, toy_config());
    for (std::size_t t = 0; t < m.vocab().size(); ++t) {
        std::int32_t s = swapped.vocab().slot_of(m.vocab().token(t));
        REQUIRE(s >= 0);
        CHECK(swapped.p()[s] == m.q()[t]);
        CHECK(swapped.q()[s] == m.p()[t]);
    }
}

TEST_CASE("fit: identical corpora give p == q") {
    Corpus c = corpus_of({"a b", "a", "b a", "a b c"}, "x");
    Corpus c2 = c;
    c2.source_label = "y";
    for (auto& d : c2.docs) d.id = "y" + d.id;
    TokenModel m = fit(c, c2, toy_config());
    for (std::size_t t = 0; t < m.vocab().size(); ++t) CHECK(m.p()[t] == m.q()[t]);
}

TEST_CASE("fit: deterministic byte-identical model files") {
    testsup::TempDir tmp("fitdet");
    Corpus human = testsup::synth_prose_corpus(60, 5, "h");
    Corpus llm = testsup::synth_prose_corpus(60, 9, "l");
    FitConfig cfg = toy_config();
    cfg.min_df = 2;

    save_model(fit(human, llm, cfg), tmp.file("m1.json"));
    save_model(fit(human, llm, cfg), tmp.file("m2.json"));
    CHECK(read_file(tmp.file("m1.json")) == read_file(tmp.file("m2.json")));

    // vocabulary order stable under corpus reordering
    Corpus shuffled = human;
    std::reverse(shuffled.docs.begin(), shuffled.docs.end());
    save_model(fit(shuffled, llm, cfg), tmp.file("m3.json"));
    CHECK(read_file(tmp.file("m1.json")) == read_file(tmp.file("m3.json")));
}

TEST_CASE("save/load: exact round-trip") {
    testsup::TempDir tmp("roundtrip");
    Corpus human = testsup::synth_prose_corpus(40, 1, "h");
    Corpus llm = testsup::synth_prose_corpus(40, 2, "l");
    FitConfig cfg = toy_config();
    cfg.min_df = 2;
    TokenModel m = fit(human, llm, cfg);
    save_model(m, tmp.file("m.json"));
    TokenModel back = load_model(tmp.file("m.json"));

    CHECK(back.vocab().tokens() == m.vocab().tokens());
    CHECK(back.p() == m.p());
    CHECK(back.q() == m.q());
    CHECK(back.provenance() == m.provenance());
    CHECK(back.config().min_df == cfg.min_df);

    // byte-identical re-serialization
    save_model(back, tmp.file("m2.json"));
    CHECK(read_file(tmp.file("m.json")) == read_file(tmp.file("m2.json")));
}

TEST_CASE("load_model: corrupt and future-schema files") {
    testsup::TempDir tmp("badmodel");
    {
        std::ofstream out(tmp.file("trunc.json"));
        out << R"({"schema_version": 1, "config": {"unit": "docum)";
    }
    CHECK_THROWS_WITH_AS(load_model(tmp.file("trunc.json")), doctest::Contains("CorruptModel"),
                         Error);
    {
        std::ofstream out(tmp.file("future.json"));
        out << R"({"schema_version": 99, "config": {}, "vocab": [], "p": [], "q": []})";
    }
    CHECK_THROWS_WITH_AS(load_model(tmp.file("future.json")),
                         doctest::Contains("SchemaVersionMismatch"), Error);
    {
        std::ofstream out(tmp.file("sizes.json"));
        out << R"({"schema_version":1,"config":{"unit":"document","min_df":5,"max_vocab":10,)"
            << R"("smoothing_beta":0.5,"clamp_epsilon":1e-6,"min_docs":2},)"
            << R"("vocab":["a","b"],"p":[0.5],"q":[0.5,0.5],"provenance":{}})";
    }
    CHECK_THROWS_WITH_AS(load_model(tmp.file("sizes.json")), doctest::Contains("CorruptModel"),
                         Error);
}

TEST_CASE("unit_log_likelihoods: single-token examples") {
    TokenModel m(Vocabulary::from_tokens({"t"}), {0.8}, {0.2}, toy_config(), {});

    auto [a1, b1] = unit_log_likelihoods(m, "t appears");
    CHECK(a1 == doctest::Approx(std::log(0.8)).epsilon(1e-12));
    CHECK(b1 == doctest::Approx(std::log(0.2)).epsilon(1e-12));

    auto [a0, b0] = unit_log_likelihoods(m, "nothing");
    CHECK(a0 == doctest::Approx(std::log(0.2)).epsilon(1e-12));
    CHECK(b0 == doctest::Approx(std::log(0.8)).epsilon(1e-12));
}

TEST_CASE("unit_log_likelihoods: p == q gives a == b, always finite") {
    TokenModel m(Vocabulary::from_tokens({"x", "y"}), {0.3, 0.6}, {0.3, 0.6}, toy_config(), {});
    for (const char* text : {"x", "x y", "", "y y y"}) {
        auto [a, b] = unit_log_likelihoods(m, text);
        CHECK(a == b);
        CHECK(std::isfinite(a));
    }
}

TEST_CASE("unit_log_likelihoods matches dense oracle") {
    TokenModel m = testsup::planted_model(20);
    llmfrac::SplitMix64 rng(77);
    for (int i = 0; i < 50; ++i) {
        std::string text = testsup::synth_unit_text(m.vocab().tokens(), m.p(), rng);
        auto bits = occurrence_vector(text, m.vocab()).bits;
        auto [want_a, want_b] = testsup::oracle_unit_loglik(m.p(), m.q(), bits);
        auto [got_a, got_b] = unit_log_likelihoods(m, text);
        CHECK(got_a == doctest::Approx(want_a).epsilon(1e-10));
        CHECK(got_b == doctest::Approx(want_b).epsilon(1e-10));
    }
}

TEST_CASE("sentence unit counts sentences") {
    FitConfig cfg = toy_config();
    cfg.unit = FitConfig::Unit::sentence;
    Document doc{"d", "First one. Second one! Third?", {2021, 1, 1}, {}};
    CHECK(unit_texts(doc, cfg.unit).size() == 3);
    CHECK(unit_texts(doc, FitConfig::Unit::document).size() == 1);
}
