#include "sqlforge/error.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/runner.hpp"
#include "sqlforge/sql.hpp"
#include "sqlforge/generators.hpp"

#include <catch_amalgamated.hpp>
#include <httplib.h>

#include <thread>

using namespace sqlforge;
using namespace sqlforge::eval;

namespace {

const RuleSet& shipped_rules() {
    static const RuleSet rules = RuleSet::load(runner::data_path("rules/crs_subset.tsv"));
    return rules;
}

class ThrowingDetector final : public Detector {
public:
    explicit ThrowingDetector(std::string bad) : bad_(std::move(bad)) {}
    const std::string& id() const override { return id_; }
    DetectorVerdict evaluate(std::string_view payload) const override {
        if (payload == bad_) throw std::runtime_error("boom");
        return {id_, Outcome::bypassed, "", 0};
    }

private:
    std::string id_ = "flaky";
    std::string bad_;
};

class LocalServer {
public:
    LocalServer() {
        server_.Get("/", [](const httplib::Request& req, httplib::Response& res) {
            const auto q = req.get_param_value("q");
            if (q.find("union") != std::string::npos) {
                res.status = 403;
            } else if (q == "teapot") {
                res.status = 418;
            } else {
                res.status = 200;
            }
            res.set_content("ok", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    int port() const { return port_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("rule file parsing") {
    const auto rules = RuleSet::parse("# comment\n\n9001\t1\tfoo\tfirst\n9002\t3\tbar\tsecond\n");
    REQUIRE(rules.rules().size() == 2);
    CHECK(rules.rules()[1].rule_id == "9002");
    CHECK(rules.rules()[1].paranoia_level == 3);
    CHECK_THROWS_AS(RuleSet::parse("9001\t1\n"), Error);
    CHECK_THROWS_AS(RuleSet::parse("9001\tx\tfoo\td\n"), Error);
    CHECK_THROWS_AS(RuleSet::parse("9001\t1\t(unclosed\td\n"), Error);
}

TEST_CASE("benign text passes every level") {
    for (int pl = 1; pl <= 3; ++pl) CHECK(evaluate_rule_waf("hello world", shipped_rules(), pl).outcome == Outcome::bypassed);
}

TEST_CASE("shipped ruleset golden verdicts") {
    struct Case {
        const char* payload;
        int pl;
        Outcome outcome;
        const char* rule;
    };
    const Case cases[] = {
        {"' OR 1=1--", 1, Outcome::blocked, "1001"},
        {"' OR '1'='1", 1, Outcome::blocked, "1001"},
        {"admin'--", 1, Outcome::blocked, "1013"},
        {"1 /*x*/ union/**/select", 1, Outcome::bypassed, ""},
        {"1 /*x*/ union/**/select", 2, Outcome::blocked, "2001"},
        {"%27%20UNION%20SELECT%201--", 1, Outcome::blocked, "1003"},
    };
    for (const auto& c : cases) {
        INFO(c.payload << " at PL" << c.pl);
        const auto v = evaluate_rule_waf(c.payload, shipped_rules(), c.pl);
        CHECK(v.outcome == c.outcome);
        CHECK(v.detail == c.rule);
        CHECK(v.elapsed_ms == 0);
    }
}

TEST_CASE("blocking is monotone in paranoia level") {
    const auto catalog = gen::load_catalog(runner::data_path("catalog/traditional.txt"));
    for (const auto& tmpl : catalog) {
        const bool b1 = evaluate_rule_waf(tmpl, shipped_rules(), 1).outcome == Outcome::blocked;
        const bool b2 = evaluate_rule_waf(tmpl, shipped_rules(), 2).outcome == Outcome::blocked;
        const bool b3 = evaluate_rule_waf(tmpl, shipped_rules(), 3).outcome == Outcome::blocked;
        INFO(tmpl);
        REQUIRE((!b1 || b2));
        REQUIRE((!b2 || b3));
    }
}

TEST_CASE("score detector") {
    MlModel zero;
    zero.weights = {{"or", 0.0}, {"1=1", 0.0}};
    CHECK(zero.score("' or 1=1") == 0.0);
    CHECK(evaluate_ml_stub("' or 1=1", zero).outcome == Outcome::bypassed);

    MlModel m = MlModel::parse(R"({"threshold": 0.5, "weights": {"sleep(": 0.75, "union": 0.35}})");
    // 1 - exp(-0.75) = 0.5276
    CHECK(m.score("SLEEP(5)") == Catch::Approx(1.0 - std::exp(-0.75)));
    CHECK(evaluate_ml_stub("SLEEP(5)", m).outcome == Outcome::blocked);
    CHECK(evaluate_ml_stub("union", m).outcome == Outcome::bypassed);
    // Distinct grams count once.
    CHECK(m.score("union union") == Catch::Approx(1.0 - std::exp(-0.35)));
    CHECK(m.score("%75nion") == Catch::Approx(1.0 - std::exp(-0.35)));

    m.threshold = 0.0;
    CHECK(evaluate_ml_stub("nothing here", m).outcome == Outcome::blocked);

    CHECK_THROWS_AS(MlModel::parse("{\"threshold\": 0.5}"), Error);
    CHECK_THROWS_AS(MlModel::parse("not json"), Error);
}

TEST_CASE("shipped score models flag a classic tautology") {
    for (const char* id : {"waf_brain_stub", "cnn_waf_stub"}) {
        const auto m = MlModel::load(runner::data_path(std::string("ml/") + id + ".json"));
        CHECK(m.score("hello") < m.threshold);
        CHECK(m.score("' OR 1=1-- UNION SELECT sleep(5)") >= m.threshold);
    }
}

TEST_CASE("remote detector maps status codes") {
    LocalServer server;
    RemoteWafConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(server.port()) + "/";
    cfg.timeout_ms = 2000;
    CHECK(evaluate_remote("' union select 1", cfg).outcome == Outcome::blocked);
    CHECK(evaluate_remote("hello", cfg).outcome == Outcome::bypassed);
    CHECK(evaluate_remote("teapot", cfg).outcome == Outcome::error);
}

TEST_CASE("unreachable remote detector is an error verdict") {
    RemoteWafConfig cfg;
    cfg.url = "http://127.0.0.1:1/";
    cfg.timeout_ms = 500;
    CHECK(evaluate_remote("x", cfg).outcome == Outcome::error);
}

TEST_CASE("executor fixture behaviour") {
    SqlExecutor ex;
    CHECK(ex.baseline_row_count() == 1);

    const auto taut = ex.execute("' OR '1'='1");
    CHECK(taut.status == ExecStatus::executed);
    CHECK(taut.row_count == 10);

    const auto bad = ex.execute("'; SELEC");
    CHECK(bad.status == ExecStatus::sql_error);
    CHECK_FALSE(bad.error_class.empty());

    const auto benign = ex.execute("alice");
    CHECK(benign.status == ExecStatus::executed);
    CHECK(benign.row_count == 1);
    CHECK(classify_functional(benign, "alice").category == FunctionalCategory::no_effect);
}

TEST_CASE("executor leaves the fixture intact") {
    SqlExecutor ex;
    const auto drop = ex.execute("'; DROP TABLE users-- ");
    CHECK(drop.status == ExecStatus::sql_error);
    CHECK(ex.execute("' OR '1'='1").row_count == 10);
}

TEST_CASE("simulated delays classify as time delay") {
    SqlExecutor ex;
    const auto o = ex.execute("' OR SLEEP(5)-- ");
    CHECK(o.elapsed_ms >= kTimeDelayThresholdMs);
    CHECK(classify_functional(o, "").category == FunctionalCategory::time_delay);
}

TEST_CASE("MySQL comment syntax is translated") {
    CHECK(translate_mysql("SELECT 1 # c\n").find('#') == std::string::npos);
    CHECK(translate_mysql("SELECT /*!50000 1*/").find("/*") == std::string::npos);
    SqlExecutor ex;
    CHECK(ex.execute("' OR 1=1#").row_count == 10);
}

TEST_CASE("functional classification rules in order") {
    ExecutionOutcome o;
    o.status = ExecStatus::executed;
    o.elapsed_ms = 5000;
    CHECK(classify_functional(o, "").category == FunctionalCategory::time_delay);

    o = {};
    o.status = ExecStatus::timeout;
    CHECK(classify_functional(o, "").category == FunctionalCategory::time_delay);

    o = {};
    o.status = ExecStatus::sql_error;
    o.error_class = "unknown_function";
    CHECK(classify_functional(o, "").category == FunctionalCategory::incompatible);
    o.error_class = "syntax_error";
    CHECK(classify_functional(o, "").category == FunctionalCategory::sql_error);

    o = {};
    o.status = ExecStatus::executed;
    o.row_count = 10;
    o.baseline_row_count = 0;
    const auto sig = classify_functional(o, "");
    CHECK(sig.category == FunctionalCategory::data_extraction);
    CHECK(sig.row_bucket == RowBucket::few);

    o.row_count = 0;
    CHECK(classify_functional(o, "").category == FunctionalCategory::no_effect);
}

TEST_CASE("evaluation matrix order and cardinality") {
    auto rules = std::make_shared<const RuleSet>(shipped_rules());
    std::vector<std::shared_ptr<const Detector>> detectors = {
        std::make_shared<RuleWafDetector>("pl1", rules, 1),
        std::make_shared<RuleWafDetector>("pl2", rules, 2),
        std::make_shared<RuleWafDetector>("pl3", rules, 3),
    };
    const std::vector<std::string> payloads = {"hello", "' OR 1=1--"};
    const auto records = run_evaluation_matrix(payloads, detectors, nullptr);
    REQUIRE(records.size() == 6);
    CHECK(records[0].detector_id == "pl1");
    CHECK(records[0].payload_index == 0);
    CHECK(records[3].payload_index == 1);
    CHECK(records[3].outcome == Outcome::blocked);

    SqlExecutor ex;
    const auto with_exec = run_evaluation_matrix(payloads, detectors, &ex);
    REQUIRE(with_exec.size() == 8);
    CHECK(with_exec[3].detector_id == kExecutorId);
    CHECK(with_exec[7].execution.has_value());
}

TEST_CASE("a failing detector only errors its own cell") {
    std::vector<std::shared_ptr<const Detector>> detectors = {
        std::make_shared<ThrowingDetector>("b"),
        std::make_shared<MlDetector>("ml", MlModel{}),
        std::make_shared<RuleWafDetector>("pl1", std::make_shared<const RuleSet>(shipped_rules()), 1),
    };
    const std::vector<std::string> payloads = {"a", "b"};
    MatrixOptions opts;
    opts.workers = 3;
    const auto records = run_evaluation_matrix(payloads, detectors, nullptr, opts);
    REQUIRE(records.size() == 6);
    std::size_t errors = 0;
    for (const auto& r : records) errors += r.outcome == Outcome::error;
    CHECK(errors == 1);
    CHECK(records[3].outcome == Outcome::error);
}

TEST_CASE("matrix output does not depend on worker count") {
    auto rules = std::make_shared<const RuleSet>(shipped_rules());
    std::vector<std::shared_ptr<const Detector>> detectors = {
        std::make_shared<RuleWafDetector>("pl1", rules, 1),
        std::make_shared<RuleWafDetector>("pl3", rules, 3),
    };
    const auto catalog = gen::load_catalog(runner::data_path("catalog/traditional.txt"));
    SqlExecutor ex;
    auto csv = [&](std::size_t workers) {
        MatrixOptions o;
        o.workers = workers;
        std::string out;
        for (const auto& r : run_evaluation_matrix(catalog, detectors, &ex, o)) out += record_csv_line(r);
        return out;
    };
    CHECK(csv(1) == csv(4));
}

TEST_CASE("results store round trip") {
    EvaluationRecord r;
    r.payload_id = "p,1";
    r.detector_id = "pl1";
    r.outcome = Outcome::blocked;
    r.detail = "1001";
    r.elapsed_ms = 3;
    const auto text = records_csv_header() + record_csv_line(r);
    const auto back = parse_records_csv(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].payload_id == "p,1");
    CHECK(back[0].outcome == Outcome::blocked);
    CHECK(back[0].elapsed_ms == 3);
    CHECK(records_csv_header() == "payload_id,detector_id,outcome,detail,elapsed_ms\n");
}

TEST_CASE("every shipped catalog template parses once framed") {
    const auto catalog = gen::load_catalog(runner::data_path("catalog/traditional.txt"));
    Rng rng(1);
    for (const auto& tmpl : catalog) {
        const auto filled = gen::fill_placeholders(tmpl, rng);
        INFO(filled);
        CHECK(sql::parse_payload(filled).ok());
    }
}
