#include "oracles.hpp"
#include "sqlforge/diversity.hpp"
#include "sqlforge/error.hpp"

#include <catch_amalgamated.hpp>

using namespace sqlforge;
using namespace sqlforge::diversity;
using Catch::Approx;

namespace {

std::shared_ptr<const Embedder> hashed() {
    static const auto e = std::make_shared<const HashedTrigramEmbedder>();
    return e;
}

using Strings = std::vector<std::string>;

}  // namespace

TEST_CASE("levenshtein on hand-filled tables") {
    CHECK(levenshtein(std::string_view("kitten"), std::string_view("sitting")) == 3);
    CHECK(levenshtein(std::string_view(""), std::string_view("abc")) == 3);
    CHECK(levenshtein(std::string_view("abc"), std::string_view("abd")) == 1);
    // Counted over code points, not bytes.
    CHECK(levenshtein(std::string_view("caf\xc3\xa9"), std::string_view("cafe")) == 1);
}

TEST_CASE("levenshtein agrees with the recursive oracle") {
    Rng rng(2);
    const std::u32string alphabet = U"ab'= é";
    for (int i = 0; i < 2000; ++i) {
        const auto a = oracle::random_text(rng, 12, alphabet);
        const auto b = oracle::random_text(rng, 12, alphabet);
        REQUIRE(levenshtein(a, b) == oracle::levenshtein(a, b));
    }
}

TEST_CASE("lexical diversity examples") {
    CHECK(lexical_diversity("abc", Strings{"abc"}) == 0.0);
    CHECK(lexical_diversity("abc", Strings{"abd"}) == Approx(1.0 / 3.0));
    CHECK(lexical_diversity("a", Strings{"b"}) == 1.0);
    CHECK(lexical_diversity("abc", Strings{}) == 1.0);
    CHECK(lexical_diversity("abc", Strings{"xyz", "abd"}) == Approx(1.0 / 3.0));
    CHECK(normalized_levenshtein("", "") == 0.0);
}

TEST_CASE("n-gram sets and distance") {
    const auto g = char_ngrams("ABCD");
    CHECK(g.size() == 6);
    CHECK(ngram_diversity("ABCD", Strings{"ABCD"}) == 0.0);
    CHECK(ngram_diversity("ABCD", Strings{"WXYZ"}) == 1.0);
    CHECK(ngram_diversity("ABCD", Strings{"ABCE"}) == Approx(1.0 - 3.0 / 9.0));
    CHECK(ngram_diversity("ABCD", Strings{}) == 1.0);
    CHECK(jaccard_distance(char_ngrams("a"), char_ngrams("b")) == 0.0);
}

TEST_CASE("n-gram distance agrees with the set oracle") {
    Rng rng(4);
    const std::u32string alphabet = U"abc' ";
    for (int i = 0; i < 2000; ++i) {
        const auto a = oracle::random_text(rng, 10, alphabet);
        const auto b = oracle::random_text(rng, 10, alphabet);
        REQUIRE(jaccard_distance(char_ngrams(utf8_encode(a)), char_ngrams(utf8_encode(b))) ==
                Approx(oracle::jaccard_distance(a, b)).margin(1e-12));
    }
}

TEST_CASE("semantic diversity") {
    const auto e = hashed();
    CHECK(semantic_diversity("' OR 1=1", Strings{"' OR 1=1"}, *e) == Approx(0.0).margin(1e-6));
    CHECK(semantic_diversity("' OR 1=1", Strings{}, *e) == 1.0);
    CHECK(semantic_diversity("aaaa", Strings{"zzzz"}, *e) == 1.0);
}

TEST_CASE("contextual tokens keep quotes and operators") {
    CHECK(context_tokens("' OR 1=1 -- x") == Strings{"'", "or", "1", "=", "1", "--", "x"});
    CHECK(context_tokens("UNION(SELECT a,b)") == Strings{"union", "select", "a", "b"});
}

TEST_CASE("contextual similarity") {
    const auto e = hashed();
    const auto same = contextual_similarity("' OR 1=1 --", Strings{"' OR 1=1 --"}, *e);
    CHECK(same.max_f1 == Approx(1.0));
    CHECK(same.diversity == Approx(0.0).margin(1e-9));
    const auto empty = contextual_similarity("x", Strings{}, *e);
    CHECK(empty.max_f1 == 0.0);
    CHECK(empty.diversity == 1.0);
    const auto disjoint = contextual_similarity("aaaa", Strings{"zzzz"}, *e);
    CHECK(disjoint.max_f1 == 0.0);
    CHECK(disjoint.diversity == 1.0);
}

TEST_CASE("token match is symmetric in F1") {
    const auto e = hashed();
    const auto ab = token_match("' UNION SELECT a FROM t --", "' OR 1=1 --", *e);
    const auto ba = token_match("' OR 1=1 --", "' UNION SELECT a FROM t --", *e);
    CHECK(ab.f1 == Approx(ba.f1));
    CHECK(ab.precision == Approx(ba.recall));
}

TEST_CASE("ast diversity") {
    CHECK(ast_diversity("' OR 1=1 -- ", Strings{"' OR 1=1 -- "}) == 0.0);
    CHECK(ast_diversity("x", Strings{}) == 1.0);
    auto single = [](std::string_view s) { return Tree(std::string(s)); };
    CHECK(ast_diversity("a", Strings{"b"}, single) == 1.0);
    const double d = ast_diversity("' OR 1=1 -- ", Strings{"' UNION SELECT 1, 2 -- "});
    CHECK(d > 0.0);
    CHECK(d <= 1.0);
}

TEST_CASE("unparseable payloads use the token tree") {
    CHECK(payload_tree("' banana ((").label == "tokens");
    CHECK(payload_tree("' OR 1=1 -- ").label == "select");
}

TEST_CASE("functional diversity") {
    using eval::FunctionalSignature;
    std::vector<FunctionalSignature> same(4);
    CHECK(functional_diversity(same) == 0.25);
    std::vector<FunctionalSignature> distinct(3);
    distinct[1].category = eval::FunctionalCategory::sql_error;
    distinct[2].category = eval::FunctionalCategory::time_delay;
    CHECK(functional_diversity(distinct) == 1.0);
    CHECK_THROWS_AS(functional_diversity(std::vector<FunctionalSignature>{}), Error);
}

TEST_CASE("aggregate is the mean of the six metrics") {
    CHECK(aggregate(100.0, {0.6, 0.6, 0.6, 0.6, 0.6, 0.6}).total == Approx(0.6));
    CHECK(aggregate(100.0, {0.0, 0.0, 0.0, 0.0, 0.0, 0.6}).total == Approx(0.1));
    const auto r = aggregate(66.14, {0.3787, 0.6097, 0.1265, 0.7527, 0.6814, 0.3830});
    CHECK(r.total == Approx(0.4887).margin(1e-4));
    CHECK(r.uniqueness_pct == 66.14);
}

TEST_CASE("uniqueness") {
    CHECK(uniqueness_pct(Strings{"a", "b", "a", "c"}) == 75.0);
    CHECK_THROWS_AS(uniqueness_pct(Strings{}), Error);
}

TEST_CASE("filter gates") {
    const auto e = hashed();
    const auto first = passes_filter("' OR 1=1 -- ", Strings{}, 0.5, *e);
    CHECK(first.passed);
    CHECK(first.semantic == 1.0);
    CHECK(first.lexical == 1.0);
    CHECK(first.contextual_f1 == 0.0);

    const auto dup = passes_filter("' OR 1=1 -- ", Strings{"' OR 1=1 -- "}, 0.5, *e);
    CHECK_FALSE(dup.passed);
    CHECK(dup.semantic <= 0.5);
    CHECK(dup.lexical <= 0.5);
    CHECK(dup.contextual_f1 >= 0.5);

    CHECK_THROWS_AS(passes_filter("x", Strings{}, 0.0, *e), Error);
    CHECK_THROWS_AS(passes_filter("x", Strings{}, 1.0, *e), Error);
}

TEST_CASE("store-based filter matches the direct filter") {
    const auto e = hashed();
    const Strings texts = {"' OR 1=1 -- ", "' UNION SELECT name FROM users -- ", "admin'#", "' AND SLEEP(5) -- ",
                           "' OR 'a'='a"};
    FeatureStore store(e);
    for (const auto& t : texts) store.add(t);
    for (double theta : {0.2, 0.5, 0.8}) {
        for (std::size_t c = 1; c < texts.size(); ++c) {
            std::vector<std::size_t> acc;
            for (std::size_t k = 0; k < c; ++k) acc.push_back(k);
            const auto a = passes_filter(store, c, acc, theta);
            const auto b = passes_filter(texts[c], std::span(texts.data(), c), theta, *e);
            CHECK(a.passed == b.passed);
            CHECK(a.semantic == Approx(b.semantic).margin(1e-9));
            CHECK(a.lexical == Approx(b.lexical).margin(1e-12));
            CHECK(a.contextual_f1 == Approx(b.contextual_f1).margin(1e-6));
        }
    }
}

TEST_CASE("lower bounds never exceed the exact value") {
    const auto e = hashed();
    FeatureStore store(e);
    Rng rng(8);
    const std::u32string alphabet = U"abc'=( ";
    for (int i = 0; i < 30; ++i) store.add(utf8_encode(U"x" + oracle::random_text(rng, 15, alphabet)));
    for (std::size_t i = 0; i < store.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            REQUIRE(store.lexical_lower_bound(i, j) <= store.lexical(i, j) + 1e-12);
            REQUIRE(store.ast_lower_bound(i, j) <= store.ast(i, j) + 1e-12);
        }
    }
}

TEST_CASE("set scoring compares each payload with its predecessors") {
    const Strings payloads = {"' OR 1=1 -- ", "' OR 1=1 -- ", "' UNION SELECT 1 -- "};
    std::vector<eval::FunctionalSignature> sigs(3);
    sigs[2].category = eval::FunctionalCategory::data_extraction;
    const auto score = score_set(payloads, sigs, hashed());
    REQUIRE(score.detail.size() == 3);
    CHECK(score.detail[1].lexical == 0.0);
    CHECK(score.detail[1].semantic == Approx(0.0).margin(1e-6));
    CHECK(score.report.uniqueness_pct == Approx(200.0 / 3.0));
    CHECK(score.report.functional == Approx(2.0 / 3.0));
    CHECK(score.report.lexical == Approx((0.0 + score.detail[2].lexical) / 2.0));
    const double mean6 = (score.report.semantic + score.report.lexical + score.report.contextual +
                          score.report.ngram + score.report.ast + score.report.functional) /
                         6.0;
    CHECK(score.report.total == Approx(mean6));
}

TEST_CASE("set scoring does not depend on worker count") {
    Strings payloads;
    Rng rng(12);
    for (int i = 0; i < 40; ++i) payloads.push_back("' OR " + std::to_string(rng.below(50)) + "=" + std::to_string(rng.below(50)) + " -- ");
    std::vector<eval::FunctionalSignature> sigs(payloads.size());
    const auto a = score_set(payloads, sigs, hashed(), payload_tree, 1);
    const auto b = score_set(payloads, sigs, hashed(), payload_tree, 4);
    CHECK(report_csv_line(a.report) == report_csv_line(b.report));
}

TEST_CASE("signature count must match payload count") {
    std::vector<eval::FunctionalSignature> sigs(1);
    CHECK_THROWS_AS(score_set(Strings{"a", "b"}, sigs, hashed()), Error);
}
