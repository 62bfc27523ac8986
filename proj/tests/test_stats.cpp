#include "sqlforge/error.hpp"
#include "sqlforge/stats.hpp"
#include "sqlforge/util.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

using namespace sqlforge;
using namespace sqlforge::stats;
using Catch::Approx;
using V = std::vector<double>;

namespace {

eval::EvaluationRecord rec(const char* det, eval::Outcome o) {
    eval::EvaluationRecord r;
    r.detector_id = det;
    r.outcome = o;
    return r;
}

std::size_t inversions(const std::vector<int>& p) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) n += p[i] > p[j];
    return n;
}

}  // namespace

TEST_CASE("bypass rate excludes errors") {
    using eval::Outcome;
    std::vector<eval::EvaluationRecord> records;
    for (int i = 0; i < 4; ++i) records.push_back(rec("d", Outcome::bypassed));
    for (int i = 0; i < 4; ++i) records.push_back(rec("d", Outcome::blocked));
    for (int i = 0; i < 2; ++i) records.push_back(rec("d", Outcome::error));
    records.push_back(rec("other", Outcome::bypassed));
    const auto s = bypass_rate(records, "d");
    CHECK(s.tested == 8);
    CHECK(s.bypassed == 4);
    CHECK(s.rate_pct == 50.0);
    CHECK_THROWS_AS(bypass_rate(records, "missing"), Error);
}

TEST_CASE("bypass rate arithmetic") {
    std::vector<eval::EvaluationRecord> records;
    for (int i = 0; i < 1000; ++i) records.push_back(rec("d", i < 227 ? eval::Outcome::bypassed : eval::Outcome::blocked));
    CHECK(bypass_rate(records, "d").rate_pct == Approx(22.70));
    for (auto& r : records) r.outcome = eval::Outcome::blocked;
    CHECK(bypass_rate(records, "d").rate_pct == 0.0);
}

TEST_CASE("mean and sample sigma") {
    const auto a = mean_sigma(V{5, 5, 5, 5, 5});
    CHECK(a.mean == 5.0);
    CHECK(*a.sigma == 0.0);
    const auto b = mean_sigma(V{1, 2, 3});
    CHECK(b.mean == 2.0);
    CHECK(*b.sigma == Approx(1.0));
    const auto c = mean_sigma(V{7});
    CHECK(c.mean == 7.0);
    CHECK_FALSE(c.sigma.has_value());
    CHECK_THROWS_AS(mean_sigma(V{}), Error);
}

TEST_CASE("run summary and overall mean") {
    const auto s = summarize_runs("abc", {20.0, 22.0, 24.0});
    CHECK(s.config_digest == "abc");
    CHECK(s.mean_pct == 22.0);
    CHECK(*s.sigma_pct == Approx(2.0));
    CHECK(overall_mean(V{10, 20, 60}) == 30.0);
}

TEST_CASE("pearson") {
    CHECK(pearson(V{1, 2, 3}, V{2, 4, 6}).coefficient == Approx(1.0));
    CHECK(pearson(V{1, 2, 3}, V{3, 2, 1}).coefficient == Approx(-1.0));
    CHECK_THROWS_AS(pearson(V{1, 2}, V{1, 2}), Error);
    CHECK_THROWS_AS(pearson(V{1, 2, 3}, V{1, 2}), Error);
    CHECK_THROWS_AS(pearson(V{1, 1, 1}, V{1, 2, 3}), Error);
}

TEST_CASE("published cross-system uniqueness and n-gram against bypass") {
    const V bypass = {22.73, 22.09, 21.73, 21.21, 20.35, 15.01, 12.90};
    const V uniq = {23.18, 29.95, 46.98, 100.00, 68.34, 30.10, 65.98};
    const V ngram = {0.845, 0.813, 0.851, 0.867, 0.920, 0.931, 0.891};

    const auto pu = pearson(uniq, bypass);
    CHECK(pu.coefficient == Approx(-0.093).margin(0.001));
    CHECK(pu.p_value == Approx(0.843).margin(0.005));
    CHECK(pearson(ngram, bypass).coefficient == Approx(-0.654).margin(0.002));

    const auto su = spearman(uniq, bypass);
    CHECK(su.coefficient == Approx(-0.571).margin(0.001));
    CHECK(su.p_value == Approx(0.180).margin(0.01));
    const auto sn = spearman(ngram, bypass);
    CHECK(sn.coefficient == Approx(-0.857).margin(0.001));
    CHECK(sn.p_value == Approx(0.014).margin(0.01));

    CHECK(kendall(uniq, bypass).coefficient == Approx(-0.429).margin(0.001));
    const auto kn = kendall(ngram, bypass);
    CHECK(kn.coefficient == Approx(-0.714).margin(0.001));
    CHECK(kn.p_value == Approx(0.030).margin(0.01));
}

TEST_CASE("monotone pairs give rank correlations of one") {
    const V x = {1, 5, 9, 20, 21};
    const V y = {0.1, 0.2, 3, 50, 51};
    CHECK(spearman(x, y).coefficient == Approx(1.0));
    CHECK(kendall(x, y).coefficient == Approx(1.0));
}

TEST_CASE("average ranks share ties") {
    CHECK(average_ranks(V{10, 20, 20, 5}) == V{2, 3.5, 3.5, 1});
}

TEST_CASE("inversion counts match enumeration") {
    for (int n = 1; n <= 6; ++n) {
        std::vector<int> p(n);
        std::iota(p.begin(), p.end(), 0);
        V counts(n * (n - 1) / 2 + 1, 0.0);
        do {
            counts[inversions(p)] += 1.0;
        } while (std::next_permutation(p.begin(), p.end()));
        CHECK(inversion_counts(n) == counts);
    }
}

TEST_CASE("exact kendall p-value matches permutation enumeration") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(4));
        V x(n), y(n);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        for (int i = 0; i < n; ++i) {
            x[i] = i;
            y[i] = perm[i];
        }
        const auto k = kendall(x, y);
        // Two-sided: permutations whose |S| is at least the observed |S|.
        const long pairs = n * (n - 1) / 2;
        const long s_obs = std::labs(pairs - 2 * static_cast<long>(inversions(perm)));
        std::vector<int> q(n);
        std::iota(q.begin(), q.end(), 0);
        double hits = 0, total = 0;
        do {
            total += 1;
            hits += std::labs(pairs - 2 * static_cast<long>(inversions(q))) >= s_obs;
        } while (std::next_permutation(q.begin(), q.end()));
        INFO("n=" << n);
        CHECK(k.p_value == Approx(hits / total).margin(1e-12));
        CHECK(k.coefficient == Approx(static_cast<double>(pairs - 2 * static_cast<long>(inversions(perm))) / pairs));
    }
}

TEST_CASE("correlations stay in range and p-values are probabilities") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.below(12);
        V x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng.below(6));
            y[i] = rng.uniform();
        }
        if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
        const auto row = correlate("m", x, y);
        for (const auto& c : {row.pearson, row.spearman, row.kendall}) {
            REQUIRE(c.coefficient >= -1.0 - 1e-12);
            REQUIRE(c.coefficient <= 1.0 + 1e-12);
            REQUIRE(c.p_value >= 0.0);
            REQUIRE(c.p_value <= 1.0);
        }
    }
}

TEST_CASE("bootstrap intervals") {
    const auto c = bootstrap_ci(V{5, 5, 5, 5}, 1000, 0.05);
    CHECK(c.lo == 5.0);
    CHECK(c.hi == 5.0);
    const auto two = bootstrap_ci(V{0, 10}, 10000, 0.05, 7);
    CHECK(two.lo == 0.0);
    CHECK(two.hi == 10.0);
    CHECK_THROWS_AS(bootstrap_ci(V{}, 100, 0.05), Error);
}

TEST_CASE("bootstrap is independent of workers and contains the mean") {
    const V s = {12.9, 15.0, 20.35, 21.21, 21.73, 22.09, 22.73};
    const auto a = bootstrap_ci(s, 2000, 0.05, 3, 1);
    const auto b = bootstrap_ci(s, 2000, 0.05, 3, 4);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
    CHECK(a.lo <= mean);
    CHECK(mean <= a.hi);
}

TEST_CASE("correlation csv") {
    const auto row = correlate("ngram", V{1, 2, 3, 4}, V{1, 3, 2, 4});
    CHECK(correlation_csv_header().rfind("metric,", 0) == 0);
    CHECK(correlation_csv_line(row).rfind("ngram,", 0) == 0);
}
