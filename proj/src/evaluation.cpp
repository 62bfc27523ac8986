#include "sqlforge/evaluation.hpp"

#include "http.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

namespace sqlforge::eval {

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::blocked: return "blocked";
        case Outcome::bypassed: return "bypassed";
        case Outcome::error: return "error";
    }
    return "error";
}

Outcome outcome_from_string(std::string_view s) {
    if (s == "blocked") return Outcome::blocked;
    if (s == "bypassed") return Outcome::bypassed;
    if (s == "error") return Outcome::error;
    throw Error(ErrorKind::ParseError, "unknown outcome '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

RuleSet RuleSet::parse(std::string_view text) {
    RuleSet set;
    std::size_t line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        if (trim(raw).empty() || raw.front() == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (int f = 0; f < 3; ++f) {
            auto tab = raw.find('\t', start);
            if (tab == std::string::npos) break;
            fields.push_back(raw.substr(start, tab - start));
            start = tab + 1;
        }
        fields.push_back(raw.substr(start));
        if (fields.size() != 4) {
            throw Error(ErrorKind::ConfigError,
                        "rule line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
        }
        WafRule rule;
        rule.rule_id = fields[0];
        try {
            rule.paranoia_level = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, "rule " + rule.rule_id + ": bad paranoia level");
        }
        if (rule.paranoia_level < 1 || rule.paranoia_level > 3) {
            throw Error(ErrorKind::ConfigError, "rule " + rule.rule_id + ": paranoia level must be 1..3");
        }
        rule.pattern = fields[2];
        rule.description = fields[3];
        try {
            rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            throw Error(ErrorKind::ConfigError, "rule " + rule.rule_id + ": pattern does not compile: " + e.what());
        }
        set.rules_.push_back(std::move(rule));
    }
    if (set.rules_.empty()) throw Error(ErrorKind::ConfigError, "ruleset has no rules");
    return set;
}

RuleSet RuleSet::load(const std::string& path) { return parse(read_file(path)); }

DetectorVerdict evaluate_rule_waf(std::string_view payload, const RuleSet& rules, int paranoia_level) {
    if (paranoia_level < 1 || paranoia_level > 3) {
        throw Error(ErrorKind::InvalidParams, "paranoia level must be 1..3");
    }
    const std::string decoded = url_decode(payload);
    const std::string lowered = to_lower(decoded);
    DetectorVerdict v;
    v.outcome = Outcome::bypassed;
    for (const auto& rule : rules.rules()) {
        if (rule.paranoia_level > paranoia_level) continue;
        if (std::regex_search(decoded, rule.compiled) || std::regex_search(lowered, rule.compiled)) {
            v.outcome = Outcome::blocked;
            v.detail = rule.rule_id;
            return v;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------

MlModel MlModel::parse(std::string_view json_text) {
    MlModel model;
    try {
        auto j = nlohmann::json::parse(json_text);
        model.threshold = j.value("threshold", 0.5);
        for (const auto& [gram, w] : j.at("weights").items()) {
            if (gram.empty()) throw Error(ErrorKind::ConfigError, "empty gram in weight table");
            if (!w.is_number()) throw Error(ErrorKind::ConfigError, "weight for '" + gram + "' is not a number");
            model.weights.emplace(to_lower(gram), w.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed weight file: ") + e.what());
    }
    return model;
}

MlModel MlModel::load(const std::string& path) { return parse(read_file(path)); }

double MlModel::score(std::string_view payload) const {
    const std::string text = to_lower(url_decode(payload));
    double sum = 0.0;
    for (const auto& [gram, w] : weights) {
        if (text.find(gram) != std::string::npos) sum += w;
    }
    return std::clamp(1.0 - std::exp(-sum), 0.0, 1.0);
}

DetectorVerdict evaluate_ml_stub(std::string_view payload, const MlModel& model) {
    const double s = model.score(payload);
    DetectorVerdict v;
    v.outcome = s >= model.threshold ? Outcome::blocked : Outcome::bypassed;
    v.detail = "score=" + fixed(s, 4);
    return v;
}

// ---------------------------------------------------------------------------

DetectorVerdict evaluate_remote(std::string_view payload, const RemoteWafConfig& config) {
    detail::HttpRequest req;
    req.method = "GET";
    const char joiner = config.url.find('?') == std::string::npos ? '?' : '&';
    req.url = config.url + joiner + config.param + "=" + url_encode(payload);
    req.timeout_ms = config.timeout_ms;

    const auto start = std::chrono::steady_clock::now();
    detail::HttpResponse resp;
    try {
        resp = detail::http_send(req);
    } catch (const std::exception& e) {
        resp.error = e.what();
    }
    DetectorVerdict v;
    v.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    if (resp.status == 0) {
        v.outcome = Outcome::error;
        v.detail = "network:" + resp.error;
    } else if (config.block_statuses.count(resp.status)) {
        v.outcome = Outcome::blocked;
        v.detail = "http=" + std::to_string(resp.status);
    } else if (config.pass_statuses.count(resp.status)) {
        v.outcome = Outcome::bypassed;
        v.detail = "http=" + std::to_string(resp.status);
    } else {
        v.outcome = Outcome::error;
        v.detail = "http=" + std::to_string(resp.status);
    }
    return v;
}

// ---------------------------------------------------------------------------

RuleWafDetector::RuleWafDetector(std::string id, std::shared_ptr<const RuleSet> rules, int paranoia_level)
    : id_(std::move(id)), rules_(std::move(rules)), level_(paranoia_level) {
    if (level_ < 1 || level_ > 3) throw Error(ErrorKind::ConfigError, "paranoia level must be 1..3");
}

DetectorVerdict RuleWafDetector::evaluate(std::string_view payload) const {
    DetectorVerdict v = evaluate_rule_waf(payload, *rules_, level_);
    v.detector_id = id_;
    return v;
}

DetectorVerdict MlDetector::evaluate(std::string_view payload) const {
    DetectorVerdict v = evaluate_ml_stub(payload, model_);
    v.detector_id = id_;
    return v;
}

DetectorVerdict RemoteDetector::evaluate(std::string_view payload) const {
    DetectorVerdict v = evaluate_remote(payload, config_);
    v.detector_id = id_;
    return v;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ExecStatus s) {
    switch (s) {
        case ExecStatus::executed: return "executed";
        case ExecStatus::sql_error: return "sql_error";
        case ExecStatus::timeout: return "timeout";
    }
    return "executed";
}

std::string_view to_string(FunctionalCategory c) {
    switch (c) {
        case FunctionalCategory::data_extraction: return "data_extraction";
        case FunctionalCategory::time_delay: return "time_delay";
        case FunctionalCategory::sql_error: return "sql_error";
        case FunctionalCategory::no_effect: return "no_effect";
        case FunctionalCategory::incompatible: return "incompatible";
    }
    return "no_effect";
}

std::string_view to_string(RowBucket b) {
    switch (b) {
        case RowBucket::zero: return "0";
        case RowBucket::one: return "1";
        case RowBucket::few: return "2-10";
        case RowBucket::many: return ">10";
    }
    return "0";
}

std::string_view to_string(DelayBucket b) { return b == DelayBucket::under_2s ? "<2s" : ">=2s"; }

bool is_incompatible_error_class(std::string_view error_class) {
    return error_class == "unknown_function" || error_class == "dialect_syntax";
}

ExecutionOutcome execute_sql_validator(std::string_view payload, SqlExecutor& executor) {
    return executor.execute(payload);
}

FunctionalSignature classify_functional(const ExecutionOutcome& outcome, std::string_view /*payload*/) {
    FunctionalSignature sig;
    sig.delay_bucket = outcome.elapsed_ms >= kTimeDelayThresholdMs ? DelayBucket::at_least_2s : DelayBucket::under_2s;
    if (outcome.status == ExecStatus::executed) {
        const auto rows = outcome.row_count;
        sig.row_bucket = rows == 0 ? RowBucket::zero : rows == 1 ? RowBucket::one : rows <= 10 ? RowBucket::few : RowBucket::many;
    }
    if (outcome.status != ExecStatus::executed) sig.error_class = outcome.error_class;

    if (outcome.status == ExecStatus::timeout || outcome.elapsed_ms >= kTimeDelayThresholdMs) {
        sig.category = FunctionalCategory::time_delay;
    } else if (outcome.status == ExecStatus::sql_error && is_incompatible_error_class(outcome.error_class)) {
        sig.category = FunctionalCategory::incompatible;
    } else if (outcome.status == ExecStatus::sql_error) {
        sig.category = FunctionalCategory::sql_error;
    } else if (outcome.row_count > outcome.baseline_row_count) {
        sig.category = FunctionalCategory::data_extraction;
    } else {
        sig.category = FunctionalCategory::no_effect;
    }
    return sig;
}

// ---------------------------------------------------------------------------

std::vector<EvaluationRecord> run_evaluation_matrix(std::span<const std::string> payloads,
                                                    std::span<const std::shared_ptr<const Detector>> detectors,
                                                    SqlExecutor* executor, const MatrixOptions& options) {
    if (detectors.empty() && executor == nullptr) {
        throw Error(ErrorKind::InvalidParams, "evaluation matrix needs at least one detector");
    }
    if (!options.payload_ids.empty() && options.payload_ids.size() != payloads.size()) {
        throw Error(ErrorKind::InvalidParams, "payload_ids size mismatch");
    }
    const std::size_t per_payload = detectors.size() + (executor ? 1 : 0);
    std::vector<EvaluationRecord> records(payloads.size() * per_payload);

    const std::size_t workers = std::max<std::size_t>(
        1, options.workers ? options.workers : std::max<std::size_t>(detectors.size(), 1));
    constexpr std::size_t kBlock = 64;

    std::exception_ptr failure;
    std::mutex failure_mutex;

    for (std::size_t block_start = 0; block_start < payloads.size(); block_start += kBlock) {
        const std::size_t block_end = std::min(payloads.size(), block_start + kBlock);
        const std::size_t cells = (block_end - block_start) * per_payload;
        std::atomic<std::size_t> next{0};

        auto work = [&] {
            while (true) {
                const std::size_t cell = next.fetch_add(1);
                if (cell >= cells) return;
                const std::size_t p = block_start + cell / per_payload;
                const std::size_t d = cell % per_payload;
                EvaluationRecord& rec = records[p * per_payload + d];
                rec.payload_index = p;
                rec.payload_id = options.payload_ids.empty() ? std::to_string(p) : options.payload_ids[p];
                if (d < detectors.size()) {
                    rec.detector_id = detectors[d]->id();
                    try {
                        DetectorVerdict v = detectors[d]->evaluate(payloads[p]);
                        rec.outcome = v.outcome;
                        rec.detail = std::move(v.detail);
                        rec.elapsed_ms = v.elapsed_ms;
                    } catch (const std::exception& e) {
                        rec.outcome = Outcome::error;
                        rec.detail = std::string("exception:") + e.what();
                    }
                } else {
                    rec.detector_id = std::string(kExecutorId);
                    try {
                        ExecutionOutcome ex = executor->execute(payloads[p]);
                        rec.outcome = ex.status == ExecStatus::sql_error ? Outcome::blocked : Outcome::bypassed;
                        rec.detail = std::string(to_string(ex.status));
                        if (!ex.error_class.empty()) rec.detail += ":" + ex.error_class;
                        rec.detail += ":rows=" + std::to_string(ex.row_count);
                        rec.elapsed_ms = ex.elapsed_ms;
                        rec.execution = std::move(ex);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next.store(cells);
                        return;
                    }
                }
            }
        };

        const std::size_t n_threads = std::min(workers, cells);
        if (n_threads <= 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
        }
        if (failure) std::rethrow_exception(failure);
        if (options.sink) {
            for (std::size_t i = block_start * per_payload; i < block_end * per_payload; ++i) options.sink(records[i]);
        }
    }
    return records;
}

std::string records_csv_header() { return "payload_id,detector_id,outcome,detail,elapsed_ms\n"; }

std::string record_csv_line(const EvaluationRecord& r) {
    return csv_field(r.payload_id) + "," + csv_field(r.detector_id) + "," + std::string(to_string(r.outcome)) + "," +
           csv_field(r.detail) + "," + std::to_string(r.elapsed_ms) + "\n";
}

std::vector<EvaluationRecord> parse_records_csv(std::string_view text) {
    std::vector<EvaluationRecord> out;
    auto lines = split_lines(text);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto f = parse_csv_line(lines[i]);
        if (f.size() != 5) throw Error(ErrorKind::ParseError, "results line " + std::to_string(i + 1) + ": expected 5 fields");
        EvaluationRecord r;
        r.payload_id = f[0];
        r.detector_id = f[1];
        r.outcome = outcome_from_string(f[2]);
        r.detail = f[3];
        r.elapsed_ms = std::stoll(f[4]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace sqlforge::eval
