// Prints one PASS/FAIL line per acceptance criterion and exits non-zero
// when any criterion fails.

#include "oracles.hpp"
#include "sqlforge/diversity.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/generators.hpp"
#include "sqlforge/knowledge.hpp"
#include "sqlforge/runner.hpp"
#include "sqlforge/stats.hpp"
#include "sqlforge/util.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <sys/wait.h>

using namespace sqlforge;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void fail(const std::string& why) {
        if (!pass) detail << "; ";
        else detail.str("");
        pass = false;
        detail << why;
    }
};

int failures = 0;

void report(int n, const Verdict& v, const std::string& summary) {
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " (" << (v.pass ? summary : v.detail.str())
              << ")" << std::endl;
    failures += !v.pass;
}

runner::CsvTable reference(const std::string& name) {
    return runner::parse_csv_table(read_file(runner::data_path("reference/" + name)));
}

double num(const std::string& s) { return std::stod(s); }

// --------------------------------------------------------------------------

void correlations_from_system_table() {
    Verdict v;
    const auto t0 = Clock::now();
    const auto rows = runner::correlation_table(reference("systems_diversity_bypass.csv"));
    const double elapsed = seconds_since(t0);
    const auto expected = reference("diversity_bypass_correlations.csv");
    int checked = 0;
    for (const auto& row : expected.rows) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.metric == row[0]; });
        if (it == rows.end()) {
            v.fail("missing metric " + row[0]);
            continue;
        }
        const stats::CorrelationResult* got[] = {&it->pearson, &it->spearman, &it->kendall};
        const char* names[] = {"pearson", "spearman", "kendall"};
        for (int m = 0; m < 3; ++m) {
            const double coef = num(row[1 + 2 * m]);
            const double p = num(row[2 + 2 * m]);
            ++checked;
            if (std::abs(got[m]->coefficient - coef) > 0.002 + 1e-9) {
                v.fail(row[0] + " " + names[m] + " coefficient " + fixed(got[m]->coefficient, 4) + " vs " + row[1 + 2 * m]);
            }
            if (std::abs(got[m]->p_value - p) > 0.01 + 1e-9) {
                v.fail(row[0] + " " + names[m] + " p " + fixed(got[m]->p_value, 4) + " vs " + row[2 + 2 * m]);
            }
        }
    }
    if (checked != 24) v.fail(std::to_string(checked) + " coefficients checked, expected 24");
    if (elapsed >= 1.0) v.fail("took " + fixed(elapsed, 3) + " s");
    report(1, v, "24 coefficients and p-values within tolerance in " + fixed(elapsed, 3) + " s");
}

void seed_ablation_totals() {
    Verdict v;
    const auto t = reference("seed_ablation_diversity.csv");
    std::string got;
    for (const auto& row : t.rows) {
        diversity::MetricMeans m{num(row[1]), num(row[2]), num(row[3]), num(row[4]), num(row[5]), num(row[6])};
        const auto r = diversity::aggregate(num(row[8]), m);
        got += row[0] + "=" + fixed(r.total, 4) + " ";
        if (std::abs(r.total - num(row[7])) > 0.0001 + 1e-12)
            v.fail(row[0] + " total " + fixed(r.total, 5) + " vs " + row[7]);
    }
    if (t.rows.size() != 2) v.fail("expected 2 rows");
    report(2, v, got + "within 0.0001");
}

void waf_matrix_row_means() {
    Verdict v;
    const auto t = reference("waf_bypass_matrix.csv");
    const auto overall = *t.column("overall_mean");
    for (const auto& row : t.rows) {
        std::vector<double> cells;
        for (std::size_t c = 1; c < overall; ++c) cells.push_back(num(row[c]));
        const double mean = stats::overall_mean(cells);
        if (cells.size() != 11) v.fail(row[0] + " has " + std::to_string(cells.size()) + " targets");
        if (std::abs(mean - num(row[overall])) > 0.01 + 1e-9)
            v.fail(row[0] + " mean " + fixed(mean, 3) + " vs " + row[overall]);
    }
    report(3, v, std::to_string(t.rows.size()) + " row means within 0.01");
}

void mmr_oracle() {
    Verdict v;
    const auto t0 = Clock::now();
    Rng rng(2024);
    const double lambdas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    int mismatches = 0, topk_mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t size = 1 + rng.below(8);
        const std::size_t dim = 2 + rng.below(6);
        std::vector<Vector> docs;
        for (std::size_t i = 0; i < size; ++i) docs.push_back(oracle::random_unit(rng, dim));
        const auto q = oracle::random_unit(rng, dim);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(4, size));
        const double lambda = lambdas[rng.below(5)];
        const auto index = oracle::make_index(docs);
        const auto got = knowledge::mmr_select(index, q, {k, lambda});
        mismatches += got != oracle::mmr(docs, q, k, lambda);

        // lambda = 1 against a plain sort by similarity.
        std::vector<std::size_t> order(size);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return cosine(docs[a], q) > cosine(docs[b], q); });
        order.resize(k);
        topk_mismatches += knowledge::mmr_select(index, q, {k, 1.0}) != order;
    }
    const double elapsed = seconds_since(t0);
    if (mismatches) v.fail(std::to_string(mismatches) + " of 1000 differ from the oracle");
    if (topk_mismatches) v.fail(std::to_string(topk_mismatches) + " lambda=1 selections differ from top-k");
    if (elapsed >= 10.0) v.fail("took " + fixed(elapsed, 2) + " s");
    report(4, v, "1000 random indexes match the oracle, lambda=1 equals top-k, " + fixed(elapsed, 2) + " s");
}

void metric_oracles() {
    Verdict v;
    Rng rng(77);
    const std::u32string alphabet = U"ab'=( é";
    int lev = 0, gram = 0, ted = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto a = oracle::random_text(rng, 20, alphabet);
        const auto b = oracle::random_text(rng, 20, alphabet);
        lev += diversity::levenshtein(a, b) != oracle::levenshtein(a, b);
        const double dg = diversity::jaccard_distance(diversity::char_ngrams(utf8_encode(a)),
                                                      diversity::char_ngrams(utf8_encode(b)));
        gram += std::abs(dg - oracle::jaccard_distance(a, b)) > 1e-12;
    }
    for (int i = 0; i < 500; ++i) {
        const auto a = oracle::random_tree(rng, 1 + rng.below(6));
        const auto b = oracle::random_tree(rng, 1 + rng.below(6));
        ted += tree_edit_distance(a, b) != oracle::tree_edit_distance(a, b);
    }
    if (lev) v.fail(std::to_string(lev) + " Levenshtein mismatches");
    if (gram) v.fail(std::to_string(gram) + " n-gram Jaccard mismatches");
    if (ted) v.fail(std::to_string(ted) + " tree edit distance mismatches");
    report(5, v, "10000 Levenshtein pairs, 10000 n-gram pairs and 500 tree pairs agree with the oracles");
}

std::shared_ptr<const Embedder> hashed() {
    static const auto e = std::make_shared<const HashedTrigramEmbedder>();
    return e;
}

void algorithm_invariants() {
    Verdict v;
    const llm::MockProvider gen_mock("gen", {11});
    const std::size_t n = 25;
    gen::GenerationParams params;
    params.n = n;
    params.rng_seed = 3;

    llm::MockOptions pass_opts;
    pass_opts.fixed_discriminator_score = 0;
    const auto pass = gen::generate_reflexqli(gen_mock, llm::MockProvider("disc", pass_opts), params, {});
    if (pass.payloads.size() != n || pass.stats.reflex_iterations != n)
        v.fail("always-pass: " + std::to_string(pass.payloads.size()) + " payloads in " +
               std::to_string(pass.stats.reflex_iterations) + " iterations");

    llm::MockOptions fail_opts;
    fail_opts.fixed_discriminator_score = 10;
    gen::ReflexParams rp;
    const auto fail = gen::generate_reflexqli(gen_mock, llm::MockProvider("disc", fail_opts), params, rp);
    if (!fail.payloads.empty() || fail.stats.reflex_iterations != static_cast<std::size_t>(rp.i_max) * n)
        v.fail("always-fail: " + std::to_string(fail.payloads.size()) + " payloads after " +
               std::to_string(fail.stats.reflex_iterations) + " iterations");

    const auto scored = gen::generate_reflexqli(gen_mock, llm::MockProvider("disc", {5}), params, rp);
    for (const auto& p : scored.payloads)
        if (!p.discriminator_score || *p.discriminator_score >= rp.tau) v.fail("payload accepted with score >= tau");

    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(runner::data_path("kb"))) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    const auto index = knowledge::build_index(knowledge::chunk_files(files), *hashed());
    eval::SqlExecutor executor;
    std::size_t logged = 0, accepted_total = 0;
    for (double theta : {0.3, 0.5, 0.7}) {
        gen::RadagasOptions ro;
        ro.executor = &executor;
        std::vector<gen::AcceptanceEntry> log;
        auto rparams = params;
        rparams.theta = theta;
        rparams.temperature = 0.9;
        gen::generate_radagas(gen_mock, index, hashed(), rparams, ro, &log);
        std::vector<std::string> accepted;
        for (const auto& e : log) {
            if (!e.accepted) continue;
            const auto f = diversity::passes_filter(e.text, accepted, theta, *hashed());
            if (!e.parse_ok || !e.exec_ok || !f.passed) v.fail("accepted entry violates a gate at theta " + fixed(theta, 2));
            accepted.push_back(e.text);
        }
        if (!gen::replay_acceptance_log(log, theta, hashed())) v.fail("log replay disagrees at theta " + fixed(theta, 2));
        logged += log.size();
        accepted_total += accepted.size();
    }
    report(6, v,
           "reflexqli pass/fail/tau invariants hold; radagas log of " + std::to_string(logged) + " candidates (" +
               std::to_string(accepted_total) + " accepted) respects every gate");
}

void paranoia_monotonicity() {
    Verdict v;
    const auto rules = std::make_shared<const eval::RuleSet>(
        eval::RuleSet::load(runner::data_path("rules/crs_subset.tsv")));
    std::vector<std::string> corpus;
    gen::GenerationParams p;
    p.n = 500;
    p.rng_seed = 1;
    for (const auto& pl : gen::generate_traditional(gen::load_catalog(runner::data_path("catalog/traditional.txt")), p).payloads)
        corpus.push_back(pl.text);
    p.n = 1000 - corpus.size();
    const llm::MockProvider mock("mock", {7});
    for (const auto& pl : gen::generate_vanilla(mock, p).payloads) corpus.push_back(pl.text);
    if (corpus.size() != 1000) v.fail("corpus has " + std::to_string(corpus.size()) + " payloads");

    std::size_t bypass[4] = {0, 0, 0, 0};
    std::size_t violations = 0;
    for (const auto& payload : corpus) {
        bool blocked_below = false;
        for (int pl = 1; pl <= 3; ++pl) {
            const bool blocked = eval::evaluate_rule_waf(payload, *rules, pl).outcome == eval::Outcome::blocked;
            if (blocked_below && !blocked) ++violations;
            blocked_below = blocked;
            bypass[pl] += !blocked;
        }
    }
    if (violations) v.fail(std::to_string(violations) + " payloads unblocked at a higher level");
    if (!(bypass[1] >= bypass[2] && bypass[2] >= bypass[3])) v.fail("bypass counts not ordered");
    report(7, v,
           "bypass PL1 " + fixed(bypass[1] / 10.0, 1) + "% >= PL2 " + fixed(bypass[2] / 10.0, 1) + "% >= PL3 " +
               fixed(bypass[3] / 10.0, 1) + "% on 1000 payloads, no per-payload violations");
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path().string());
    return files;
}

void grid_determinism() {
    Verdict v;
    const auto base = fs::temp_directory_path() / "sqlforge_acceptance_grid";
    fs::remove_all(base);
    const std::string config = std::string(SQLFORGE_SOURCE_DIR) + "/configs/grid_mock.json";
    double worst = 0.0;
    std::vector<std::map<std::string, std::string>> snaps;
    for (const char* name : {"a", "b"}) {
        const auto out = base / name;
        const std::string cmd = std::string("\"") + SQLFORGE_CLI_PATH + "\" --config \"" + config +
                                "\" --mock --seed 7 --quiet --out \"" + out.string() + "\" grid > \"" +
                                (base.string() + "/" + name + ".log") + "\" 2>&1";
        fs::create_directories(base);
        const auto t0 = Clock::now();
        const int rc = std::system(cmd.c_str());
        worst = std::max(worst, seconds_since(t0));
        if (rc != 0 && WEXITSTATUS(rc) != 1) v.fail(std::string("grid run ") + name + " exited with " + std::to_string(WEXITSTATUS(rc)));
        snaps.push_back(snapshot(out));
    }
    if (snaps[0].empty()) v.fail("no artifacts written");
    if (snaps[0] != snaps[1]) {
        std::size_t differing = 0;
        for (const auto& [k, val] : snaps[0]) differing += !snaps[1].count(k) || snaps[1].at(k) != val;
        v.fail(std::to_string(differing) + " files differ between invocations");
    }
    const auto grid_csv = snaps[0].find("grid.csv");
    if (grid_csv == snaps[0].end() || std::count(grid_csv->second.begin(), grid_csv->second.end(), '\n') != 5)
        v.fail("grid.csv does not hold 4 rows");
    if (worst >= 60.0) v.fail("slowest invocation took " + fixed(worst, 1) + " s");
    report(8, v,
           std::to_string(snaps[0].size()) + " artifacts byte-identical across two invocations, slowest " +
               fixed(worst, 2) + " s");
    fs::remove_all(base);
}

void reference_fixtures() {
    Verdict v;
    for (const char* name : {"waf_bypass_matrix.csv", "seed_ablation_summary.csv", "seed_ablation_targets.csv"}) {
        if (!fs::exists(runner::data_path(std::string("reference/") + name))) v.fail(std::string("missing ") + name);
    }
    const auto out = fs::temp_directory_path() / "sqlforge_acceptance_report";
    fs::remove_all(out);
    runner::ExperimentConfig c;
    c.name = "Traditional (local)";
    c.generator = gen::GeneratorKind::traditional;
    c.n = 50;
    c.runs = 1;
    c.mock = true;
    c.output_dir = (out / "runs").string();
    const auto summary = runner::run_experiment(c);
    const std::vector<runner::ExperimentSummary> summaries = {summary};
    runner::emit_report(summaries, (out / "report").string(), runner::ReportFormat::text, runner::data_path("reference"));
    const auto text = read_file((out / "report" / "report.txt").string());
    const auto measured = text.find("measured");
    const auto published = text.find("published reference: waf_bypass_matrix");
    if (measured == std::string::npos) v.fail("measured matrix missing");
    if (published == std::string::npos) v.fail("published waf_bypass_matrix reference missing");
    if (text.find("Traditional (local)") == std::string::npos) v.fail("local system row missing");
    for (const char* ref : {"seed_ablation_summary", "seed_ablation_targets"})
        if (text.find(std::string("reference: ") + ref) == std::string::npos) v.fail(std::string(ref) + " not rendered");
    if (text.find("RADAGAS-GPT4o") == std::string::npos) v.fail("reference rows missing");
    report(9, v, "published reference fixtures ship and render beside the measured matrix");
    fs::remove_all(out);
}

}  // namespace

int main() {
    const std::pair<int, void (*)()> criteria[] = {
        {1, correlations_from_system_table}, {2, seed_ablation_totals},      {3, waf_matrix_row_means},      {4, mmr_oracle},
        {5, metric_oracles},     {6, algorithm_invariants}, {7, paranoia_monotonicity}, {8, grid_determinism},
        {9, reference_fixtures},
    };
    for (const auto& [n, fn] : criteria) {
        try {
            fn();
        } catch (const std::exception& e) {
            Verdict v;
            v.fail(std::string("threw: ") + e.what());
            report(n, v, "");
        }
    }
    std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
