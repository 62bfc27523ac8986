#pragma once
// Detector harness: paranoia-levelled rule engine, n-gram score detector,
// remote HTTP WAF client, SQL execution validator with functional
// classification, and the payload x detector evaluation matrix.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::eval {

enum class Outcome { blocked, bypassed, error };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct DetectorVerdict {
    std::string detector_id;
    Outcome outcome = Outcome::error;
    std::string detail;
    std::int64_t elapsed_ms = 0;
};

// ---------------------------------------------------------------------------
// Rule engine

struct WafRule {
    std::string rule_id;
    std::string pattern;
    int paranoia_level = 1;
    std::string description;
    std::regex compiled;
};

/// Tab-separated rule file: rule_id, paranoia_level, pattern, description.
/// Blank lines and lines starting with '#' are skipped. Patterns are
/// written against lowercase text.
class RuleSet {
public:
    static RuleSet parse(std::string_view text);
    static RuleSet load(const std::string& path);

    const std::vector<WafRule>& rules() const noexcept { return rules_; }

private:
    std::vector<WafRule> rules_;
};

/// URL-decodes the payload once; blocks iff any rule with level <= pl
/// matches the decoded text or its lowercased copy. detail = first rule id
/// in file order.
DetectorVerdict evaluate_rule_waf(std::string_view payload, const RuleSet& rules, int paranoia_level);

// ---------------------------------------------------------------------------
// Score detector standing in for neural WAFs

/// score = 1 - exp(-sum of weights of distinct matched grams), clamped to
/// [0, 1]. Grams are lowercase character n-grams of the sizes present in
/// the weight table, taken from the URL-decoded payload.
struct MlModel {
    std::map<std::string, double, std::less<>> weights;
    double threshold = 0.5;

    static MlModel parse(std::string_view json_text);
    static MlModel load(const std::string& path);

    double score(std::string_view payload) const;
};

DetectorVerdict evaluate_ml_stub(std::string_view payload, const MlModel& model);

// ---------------------------------------------------------------------------
// Remote WAF

struct RemoteWafConfig {
    std::string url;
    std::string param = "q";
    std::set<int> block_statuses = {403, 406};
    std::set<int> pass_statuses = {200};
    int timeout_ms = 10000;
};

DetectorVerdict evaluate_remote(std::string_view payload, const RemoteWafConfig& config);

// ---------------------------------------------------------------------------
// Detector interface used by the matrix runner

class Detector {
public:
    virtual ~Detector() = default;
    virtual const std::string& id() const = 0;
    virtual DetectorVerdict evaluate(std::string_view payload) const = 0;
};

class RuleWafDetector final : public Detector {
public:
    RuleWafDetector(std::string id, std::shared_ptr<const RuleSet> rules, int paranoia_level);
    const std::string& id() const override { return id_; }
    DetectorVerdict evaluate(std::string_view payload) const override;

private:
    std::string id_;
    std::shared_ptr<const RuleSet> rules_;
    int level_;
};

class MlDetector final : public Detector {
public:
    MlDetector(std::string id, MlModel model) : id_(std::move(id)), model_(std::move(model)) {}
    const std::string& id() const override { return id_; }
    DetectorVerdict evaluate(std::string_view payload) const override;

private:
    std::string id_;
    MlModel model_;
};

class RemoteDetector final : public Detector {
public:
    RemoteDetector(std::string id, RemoteWafConfig config) : id_(std::move(id)), config_(std::move(config)) {}
    const std::string& id() const override { return id_; }
    DetectorVerdict evaluate(std::string_view payload) const override;

private:
    std::string id_;
    RemoteWafConfig config_;
};

// ---------------------------------------------------------------------------
// Execution validator

enum class ExecStatus { executed, sql_error, timeout };

std::string_view to_string(ExecStatus s);

struct ExecutionOutcome {
    ExecStatus status = ExecStatus::executed;
    std::int64_t row_count = 0;
    std::int64_t baseline_row_count = 0;
    std::int64_t elapsed_ms = 0;
    std::string error_class;
    std::string error_message;
};

struct DbConfig {
    std::string backend = "sqlite";  // "mysql" is declared but not built in
    std::string host = "127.0.0.1";
    int port = 3306;
    std::string database = "appdb";
    std::string user = "app";
    std::string password_env;
    int statement_timeout_ms = 8000;
    /// SLEEP/BENCHMARK advance a virtual clock instead of blocking, and
    /// elapsed_ms reports only that virtual time.
    bool simulate_delays = true;
    std::size_t pool_size = 2;
    std::string baseline_literal = "alice";
};

/// Runs payloads inside `SELECT id, name FROM users WHERE name = '<payload>'`
/// against an embedded fixture database (users table, 10 rows) with MySQL
/// compatibility shims. Thread-safe through a small connection pool.
class SqlExecutor {
public:
    explicit SqlExecutor(DbConfig config = {});
    ~SqlExecutor();
    SqlExecutor(const SqlExecutor&) = delete;
    SqlExecutor& operator=(const SqlExecutor&) = delete;

    ExecutionOutcome execute(std::string_view payload);
    std::int64_t baseline_row_count() const noexcept { return baseline_; }
    const DbConfig& config() const noexcept { return config_; }

private:
    struct Connection;
    DbConfig config_;
    std::vector<std::unique_ptr<Connection>> pool_;
    std::vector<Connection*> idle_;
    struct Sync;
    std::unique_ptr<Sync> sync_;
    std::int64_t baseline_ = 0;

    ExecutionOutcome run(Connection& conn, std::string_view sql);
};

/// Rewrites MySQL-only surface syntax into the embedded engine's dialect.
std::string translate_mysql(std::string_view sql);

ExecutionOutcome execute_sql_validator(std::string_view payload, SqlExecutor& executor);

// ---------------------------------------------------------------------------
// Functional classification

enum class FunctionalCategory { data_extraction, time_delay, sql_error, no_effect, incompatible };
enum class RowBucket { zero, one, few, many };  // 0, 1, 2-10, >10
enum class DelayBucket { under_2s, at_least_2s };

std::string_view to_string(FunctionalCategory c);
std::string_view to_string(RowBucket b);
std::string_view to_string(DelayBucket b);

struct FunctionalSignature {
    FunctionalCategory category = FunctionalCategory::no_effect;
    std::string error_class;
    RowBucket row_bucket = RowBucket::zero;
    DelayBucket delay_bucket = DelayBucket::under_2s;

    auto operator<=>(const FunctionalSignature&) const = default;
    bool operator==(const FunctionalSignature&) const = default;
};

inline constexpr std::int64_t kTimeDelayThresholdMs = 2000;

/// Error classes treated as dialect/feature incompatibilities.
bool is_incompatible_error_class(std::string_view error_class);

FunctionalSignature classify_functional(const ExecutionOutcome& outcome, std::string_view payload);

// ---------------------------------------------------------------------------
// Evaluation matrix

inline constexpr std::string_view kExecutorId = "sql_exec";

struct EvaluationRecord {
    std::size_t payload_index = 0;
    std::string payload_id;
    std::string detector_id;
    Outcome outcome = Outcome::error;
    std::string detail;
    std::int64_t elapsed_ms = 0;
    std::optional<ExecutionOutcome> execution;
};

struct MatrixOptions {
    std::size_t workers = 0;  // 0 -> one per detector
    std::vector<std::string> payload_ids;  // optional; defaults to the index
    std::function<void(const EvaluationRecord&)> sink;  // called in output order
};

/// Payload-major, detector order as given, executor record last per
/// payload. Detector failures become outcome=error cells; executor
/// infrastructure failures propagate.
std::vector<EvaluationRecord> run_evaluation_matrix(std::span<const std::string> payloads,
                                                    std::span<const std::shared_ptr<const Detector>> detectors,
                                                    SqlExecutor* executor, const MatrixOptions& options = {});

/// Results store: payload_id,detector_id,outcome,detail,elapsed_ms
std::string records_csv_header();
std::string record_csv_line(const EvaluationRecord& record);
std::vector<EvaluationRecord> parse_records_csv(std::string_view text);

}  // namespace sqlforge::eval
