#include "sqlforge/runner.hpp"

#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace sqlforge::runner {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorKind::ConfigError, message); }

const std::set<std::string, std::less<>> kCredentialKeys = {"password", "api_key", "apikey", "token", "secret",
                                                           "auth_token", "bearer"};

// Strict object reader: every key must be consumed, credentials never inline.
class Reader {
public:
    Reader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
        if (!object_.is_object()) config_error(where_ + " must be an object");
    }

    const json* raw(const std::string& key) {
        used_.insert(key);
        auto it = object_.find(key);
        if (it == object_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    std::optional<std::string> str(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) config_error(path(key) + " must be a string");
        return v->get<std::string>();
    }

    std::optional<double> number(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) config_error(path(key) + " must be a number");
        return v->get<double>();
    }

    std::optional<std::uint64_t> unsigned_int(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_number_unsigned()) config_error(path(key) + " must be a non-negative integer");
        return v->get<std::uint64_t>();
    }

    std::optional<bool> boolean(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) config_error(path(key) + " must be true or false");
        return v->get<bool>();
    }

    std::optional<std::vector<std::string>> strings(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) config_error(path(key) + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : *v) {
            if (!e.is_string()) config_error(path(key) + " must be an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    std::optional<std::vector<double>> numbers(const std::string& key) {
        const json* v = raw(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) config_error(path(key) + " must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) config_error(path(key) + " must be an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (const auto& item : object_.items()) {
            if (used_.count(item.key())) continue;
            if (kCredentialKeys.count(to_lower(item.key())))
                config_error(path(item.key()) + ": credentials are read from environment variables only (use *_env)");
            config_error("unknown key " + path(item.key()));
        }
    }

private:
    const json& object_;
    std::string where_;
    std::set<std::string> used_;
};

std::set<int> status_set(const json* v, const std::string& where, std::set<int> fallback) {
    if (!v) return fallback;
    if (!v->is_array()) config_error(where + " must be an array of status codes");
    std::set<int> out;
    for (const auto& e : *v) {
        if (!e.is_number_integer()) config_error(where + " must be an array of status codes");
        out.insert(e.get<int>());
    }
    return out;
}

DetectorSpec parse_detector(const json& j, std::size_t i) {
    Reader r(j, "detectors[" + std::to_string(i) + "]");
    DetectorSpec d;
    d.id = r.str("id").value_or("");
    d.kind = r.str("kind").value_or("");
    if (d.id.empty()) config_error(r.path("id") + " is required");
    if (d.kind == "rules") {
        d.path = r.str("path").value_or("");
        d.paranoia = static_cast<int>(r.unsigned_int("paranoia").value_or(1));
        if (d.paranoia < 1 || d.paranoia > 3) config_error(r.path("paranoia") + " must be 1..3");
    } else if (d.kind == "ml") {
        d.path = r.str("path").value_or("");
    } else if (d.kind == "remote") {
        d.remote.url = r.str("url").value_or("");
        if (d.remote.url.empty()) config_error(r.path("url") + " is required for remote detectors");
        d.remote.param = r.str("param").value_or(d.remote.param);
        d.remote.block_statuses = status_set(r.raw("block"), r.path("block"), d.remote.block_statuses);
        d.remote.pass_statuses = status_set(r.raw("pass"), r.path("pass"), d.remote.pass_statuses);
        d.remote.timeout_ms = static_cast<int>(r.unsigned_int("timeout_ms").value_or(d.remote.timeout_ms));
    } else {
        config_error(r.path("kind") + " must be rules, ml or remote");
    }
    r.finish();
    return d;
}

eval::DbConfig parse_database(const json& j) {
    Reader r(j, "database");
    eval::DbConfig db;
    db.backend = r.str("backend").value_or(db.backend);
    db.host = r.str("host").value_or(db.host);
    db.port = static_cast<int>(r.unsigned_int("port").value_or(db.port));
    db.database = r.str("database").value_or(db.database);
    db.user = r.str("user").value_or(db.user);
    db.password_env = r.str("password_env").value_or(db.password_env);
    db.statement_timeout_ms = static_cast<int>(r.unsigned_int("statement_timeout_ms").value_or(db.statement_timeout_ms));
    db.simulate_delays = r.boolean("simulate_delays").value_or(db.simulate_delays);
    db.pool_size = r.unsigned_int("pool_size").value_or(db.pool_size);
    db.baseline_literal = r.str("baseline_literal").value_or(db.baseline_literal);
    r.finish();
    if (db.backend != "sqlite" && db.backend != "mysql") config_error("database.backend must be sqlite or mysql");
    if (db.statement_timeout_ms <= 0) config_error("database.statement_timeout_ms must be positive");
    return db;
}

GridAxes parse_grid(const json& j) {
    Reader r(j, "grid");
    GridAxes g;
    g.model = r.str("model").value_or("");
    g.temperatures = r.numbers("temperatures").value_or(std::vector<double>{});
    g.thetas = r.numbers("thetas").value_or(std::vector<double>{});
    g.pool = r.unsigned_int("pool").value_or(g.pool);
    r.finish();
    if (g.temperatures.empty() || g.thetas.empty()) config_error("grid needs non-empty temperatures and thetas");
    if (g.pool == 0) config_error("grid.pool must be at least 1");
    for (double t : g.temperatures)
        if (t < 0.0 || t > 2.0) config_error("grid temperatures must lie in [0, 2]");
    for (double t : g.thetas)
        if (t <= 0.0 || t >= 1.0) config_error("grid thetas must lie in (0, 1)");
    return g;
}

json detector_json(const DetectorSpec& d) {
    json j;
    j["id"] = d.id;
    j["kind"] = d.kind;
    if (d.kind == "rules") {
        j["path"] = d.path;
        j["paranoia"] = d.paranoia;
    } else if (d.kind == "ml") {
        j["path"] = d.path;
    } else {
        j["url"] = d.remote.url;
        j["param"] = d.remote.param;
        j["block"] = d.remote.block_statuses;
        j["pass"] = d.remote.pass_statuses;
        j["timeout_ms"] = d.remote.timeout_ms;
    }
    return j;
}

json database_json(const eval::DbConfig& db) {
    return json{{"backend", db.backend},
                {"host", db.host},
                {"port", db.port},
                {"database", db.database},
                {"user", db.user},
                {"password_env", db.password_env},
                {"statement_timeout_ms", db.statement_timeout_ms},
                {"simulate_delays", db.simulate_delays},
                {"pool_size", db.pool_size},
                {"baseline_literal", db.baseline_literal}};
}

json report_json(const diversity::DiversityReport& d) {
    return json{{"uniqueness_pct", d.uniqueness_pct}, {"semantic", d.semantic}, {"lexical", d.lexical},
                {"contextual", d.contextual},         {"ngram", d.ngram},       {"ast", d.ast},
                {"functional", d.functional},         {"total", d.total}};
}

diversity::DiversityReport report_from_json(const json& j) {
    diversity::DiversityReport d;
    d.uniqueness_pct = j.at("uniqueness_pct").get<double>();
    d.semantic = j.at("semantic").get<double>();
    d.lexical = j.at("lexical").get<double>();
    d.contextual = j.at("contextual").get<double>();
    d.ngram = j.at("ngram").get<double>();
    d.ast = j.at("ast").get<double>();
    d.functional = j.at("functional").get<double>();
    d.total = j.at("total").get<double>();
    return d;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}

json rates_json(const std::vector<DetectorRate>& rates) {
    json arr = json::array();
    for (const auto& r : rates) arr.push_back(json{{"detector_id", r.detector_id}, {"rate_pct", optional_json(r.rate_pct)}});
    return arr;
}

std::vector<DetectorRate> rates_from(const json& j) {
    std::vector<DetectorRate> out;
    for (const auto& e : j) out.push_back({e.at("detector_id").get<std::string>(), optional_from(e, "rate_pct")});
    return out;
}

json stats_json(const gen::GenerationStats& s) {
    return json{{"calls", s.calls},
                {"refusals", s.refusals},
                {"provider_errors", s.provider_errors},
                {"candidates", s.candidates},
                {"rejected_parse", s.rejected_parse},
                {"rejected_exec", s.rejected_exec},
                {"rejected_diversity", s.rejected_diversity},
                {"reflex_iterations", s.reflex_iterations},
                {"reflex_dropped", s.reflex_dropped},
                {"score_parse_errors", s.score_parse_errors},
                {"failed_slots", s.failed_slots},
                {"stopped_on_refusals", s.stopped_on_refusals}};
}

gen::GenerationStats stats_from(const json& j) {
    gen::GenerationStats s;
    s.calls = j.at("calls").get<std::size_t>();
    s.refusals = j.at("refusals").get<std::size_t>();
    s.provider_errors = j.at("provider_errors").get<std::size_t>();
    s.candidates = j.at("candidates").get<std::size_t>();
    s.rejected_parse = j.at("rejected_parse").get<std::size_t>();
    s.rejected_exec = j.at("rejected_exec").get<std::size_t>();
    s.rejected_diversity = j.at("rejected_diversity").get<std::size_t>();
    s.reflex_iterations = j.at("reflex_iterations").get<std::size_t>();
    s.reflex_dropped = j.at("reflex_dropped").get<std::size_t>();
    s.score_parse_errors = j.at("score_parse_errors").get<std::size_t>();
    s.failed_slots = j.at("failed_slots").get<std::size_t>();
    s.stopped_on_refusals = j.at("stopped_on_refusals").get<bool>();
    return s;
}

json run_json(const RunResult& r) {
    return json{{"run", r.run_index},
                {"requested", r.requested},
                {"produced", r.produced},
                {"stats", stats_json(r.stats)},
                {"rates", rates_json(r.rates)},
                {"overall_pct", optional_json(r.overall_pct)},
                {"diversity", r.diversity ? report_json(*r.diversity) : json(nullptr)}};
}

RunResult run_from(const json& j) {
    RunResult r;
    r.run_index = j.at("run").get<std::size_t>();
    r.requested = j.at("requested").get<std::size_t>();
    r.produced = j.at("produced").get<std::size_t>();
    r.stats = stats_from(j.at("stats"));
    r.rates = rates_from(j.at("rates"));
    r.overall_pct = optional_from(j, "overall_pct");
    if (!j.at("diversity").is_null()) r.diversity = report_from_json(j.at("diversity"));
    return r;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

std::vector<std::string> shipped_kb_files() {
    std::vector<std::string> out;
    const fs::path dir = data_path("kb");
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(dir, ec))
        if (e.is_regular_file() && (e.path().extension() == ".txt" || e.path().extension() == ".md"))
            out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

bool needs_provider(gen::GeneratorKind k) {
    return k == gen::GeneratorKind::vanilla || k == gen::GeneratorKind::template_icl ||
           k == gen::GeneratorKind::radagas || k == gen::GeneratorKind::reflexqli;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double to_double(const std::string& cell, const std::string& column) {
    try {
        std::size_t used = 0;
        double v = std::stod(cell, &used);
        if (trim(cell.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::ParseError, "column " + column + ": not a number: '" + cell + "'");
}

std::string cell(const std::optional<double>& v, int decimals) { return v ? fixed(*v, decimals) : ""; }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig parse_config(std::string_view json_text_in, const std::string& base_dir,
                              std::optional<GridAxes>* grid) {
    json j;
    try {
        j = json::parse(json_text_in);
    } catch (const json::parse_error& e) {
        config_error(std::string("malformed config: ") + e.what());
    }
    Reader r(j, "config");
    const auto version = r.unsigned_int("schema_version");
    if (!version) config_error("config.schema_version is required");
    if (*version != static_cast<std::uint64_t>(kSchemaVersion))
        config_error("unsupported schema_version " + std::to_string(*version));

    ExperimentConfig c;
    c.base_dir = base_dir;
    if (auto g = r.str("generator")) {
        auto kind = gen::generator_from_string(*g);
        if (!kind) config_error("unknown generator '" + *g + "'");
        c.generator = *kind;
    }
    c.name = r.str("name").value_or(std::string(gen::to_string(c.generator)));
    c.provider = r.str("provider").value_or(c.provider);
    c.discriminator_provider = r.str("discriminator_provider").value_or("");
    c.providers_file = r.str("providers_file").value_or("");
    c.n = r.unsigned_int("n").value_or(c.n);
    c.runs = r.unsigned_int("runs").value_or(c.runs);
    c.temperature = r.number("temperature").value_or(c.temperature);
    c.theta = r.number("theta").value_or(c.theta);
    if (c.n == 0) config_error("config.n must be at least 1");
    if (c.runs == 0) config_error("config.runs must be at least 1");
    if (c.temperature < 0.0 || c.temperature > 2.0) config_error("config.temperature must lie in [0, 2]");
    if (c.theta <= 0.0 || c.theta >= 1.0) config_error("config.theta must lie in (0, 1)");

    if (const json* rj = r.raw("reflex")) {
        Reader rr(*rj, "reflex");
        c.reflex.i_max = static_cast<int>(rr.unsigned_int("i_max").value_or(c.reflex.i_max));
        c.reflex.tau = static_cast<int>(rr.unsigned_int("tau").value_or(c.reflex.tau));
        c.reflex.waf_profile = rr.str("waf_profile").value_or(c.reflex.waf_profile);
        rr.finish();
        if (c.reflex.i_max < 1) config_error("reflex.i_max must be at least 1");
        if (c.reflex.tau < 1 || c.reflex.tau > 10) config_error("reflex.tau must lie in 1..10");
    }
    if (const json* sj = r.raw("seeds")) {
        Reader sr(*sj, "seeds");
        SeedSpec s;
        s.path = sr.str("path").value_or("");
        if (s.path.empty()) config_error("seeds.path is required");
        const std::string framing = sr.str("framing").value_or("string_context");
        if (framing == "raw")
            s.framing = gen::Framing::raw;
        else if (framing == "string_context")
            s.framing = gen::Framing::string_context;
        else
            config_error("seeds.framing must be raw or string_context");
        sr.finish();
        c.seeds = s;
    }
    c.catalog = r.str("catalog").value_or("");
    if (const json* kj = r.raw("knowledge")) {
        Reader kr(*kj, "knowledge");
        c.knowledge.files = kr.strings("files").value_or(std::vector<std::string>{});
        c.knowledge.index = kr.str("index").value_or("");
        c.knowledge.chunk_size = kr.unsigned_int("chunk_size").value_or(c.knowledge.chunk_size);
        c.knowledge.chunk_overlap = kr.unsigned_int("chunk_overlap").value_or(c.knowledge.chunk_overlap);
        c.knowledge.retrieval.k = kr.unsigned_int("k").value_or(c.knowledge.retrieval.k);
        c.knowledge.retrieval.lambda = kr.number("lambda").value_or(c.knowledge.retrieval.lambda);
        c.knowledge.query = kr.str("query").value_or(c.knowledge.query);
        kr.finish();
        if (c.knowledge.chunk_overlap >= c.knowledge.chunk_size)
            config_error("knowledge.chunk_overlap must be smaller than chunk_size");
        if (c.knowledge.retrieval.k == 0) config_error("knowledge.k must be at least 1");
        if (c.knowledge.retrieval.lambda < 0.0 || c.knowledge.retrieval.lambda > 1.0)
            config_error("knowledge.lambda must lie in [0, 1]");
    }
    if (const json* ej = r.raw("embedder")) {
        Reader er(*ej, "embedder");
        c.embedder.kind = er.str("kind").value_or("hashed");
        if (c.embedder.kind == "http") {
            c.embedder.http.endpoint = er.str("endpoint").value_or("");
            c.embedder.http.model = er.str("model").value_or("");
            c.embedder.http.auth_env = er.str("auth_env").value_or("");
            c.embedder.http.dimension = er.unsigned_int("dimension").value_or(c.embedder.http.dimension);
            c.embedder.http.timeout_ms = static_cast<int>(er.unsigned_int("timeout_ms").value_or(60000));
            if (c.embedder.http.endpoint.empty()) config_error("embedder.endpoint is required for http");
        } else if (c.embedder.kind != "hashed") {
            config_error("embedder.kind must be hashed or http");
        }
        er.finish();
    }
    if (const json* dj = r.raw("detectors")) {
        if (!dj->is_array()) config_error("config.detectors must be an array");
        std::set<std::string> ids;
        for (std::size_t i = 0; i < dj->size(); ++i) {
            c.detectors.push_back(parse_detector((*dj)[i], i));
            if (c.detectors.back().id == eval::kExecutorId) config_error("detector id sql_exec is reserved");
            if (!ids.insert(c.detectors.back().id).second)
                config_error("duplicate detector id " + c.detectors.back().id);
        }
    }
    {
        auto it = j.find("database");
        r.raw("database");
        if (it != j.end()) c.database = it->is_null() ? std::nullopt : std::optional(parse_database(*it));
    }
    c.execution_gate = r.boolean("execution_gate").value_or(c.execution_gate);
    c.rng_seed = r.unsigned_int("rng_seed").value_or(0);
    c.mock_seed = r.unsigned_int("mock_seed").value_or(0);
    c.mock = r.boolean("mock").value_or(false);
    c.output_dir = r.str("output_dir").value_or(c.output_dir);
    c.workers = r.unsigned_int("workers").value_or(0);
    if (const json* gj = r.raw("grid")) {
        if (!grid) config_error("config.grid is only valid for the grid command");
        *grid = parse_grid(*gj);
    }
    r.finish();
    return c;
}

ExperimentConfig load_config(const std::string& path, std::optional<GridAxes>* grid) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        config_error("cannot read config " + path);
    }
    const fs::path parent = fs::path(path).parent_path();
    ExperimentConfig c = parse_config(text, parent.empty() ? "." : parent.string(), grid);
    if (!fs::path(c.output_dir).is_absolute()) c.output_dir = (fs::path(c.base_dir) / c.output_dir).string();
    return c;
}

std::string canonical_config(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = c.name;
    j["generator"] = gen::to_string(c.generator);
    j["provider"] = c.provider;
    j["discriminator_provider"] = c.discriminator_provider.empty() ? c.provider : c.discriminator_provider;
    j["providers_file"] = c.providers_file;
    j["n"] = c.n;
    j["runs"] = c.runs;
    j["temperature"] = c.temperature;
    j["theta"] = c.theta;
    j["reflex"] = json{{"i_max", c.reflex.i_max}, {"tau", c.reflex.tau}, {"waf_profile", c.reflex.waf_profile}};
    j["seeds"] = c.seeds ? json{{"path", c.seeds->path}, {"framing", gen::to_string(c.seeds->framing)}} : json(nullptr);
    j["catalog"] = c.catalog;
    j["knowledge"] = json{{"files", c.knowledge.files},
                          {"index", c.knowledge.index},
                          {"chunk_size", c.knowledge.chunk_size},
                          {"chunk_overlap", c.knowledge.chunk_overlap},
                          {"k", c.knowledge.retrieval.k},
                          {"lambda", c.knowledge.retrieval.lambda},
                          {"query", c.knowledge.query}};
    if (c.embedder.kind == "http")
        j["embedder"] = json{{"kind", "http"},
                             {"endpoint", c.embedder.http.endpoint},
                             {"model", c.embedder.http.model},
                             {"auth_env", c.embedder.http.auth_env},
                             {"dimension", c.embedder.http.dimension},
                             {"timeout_ms", c.embedder.http.timeout_ms}};
    else
        j["embedder"] = json{{"kind", "hashed"}};
    json dets = json::array();
    for (const auto& d : c.detectors.empty() ? builtin_detectors() : c.detectors) dets.push_back(detector_json(d));
    j["detectors"] = dets;
    j["database"] = c.database ? database_json(*c.database) : json(nullptr);
    j["execution_gate"] = c.execution_gate;
    j["rng_seed"] = c.rng_seed;
    j["mock_seed"] = c.mock_seed;
    j["mock"] = c.mock;
    return j.dump();
}

std::string config_digest(const ExperimentConfig& config) { return hex64(fnv1a64(canonical_config(config))); }

std::string data_path(std::string_view relative) {
    const char* env = std::getenv("SQLFORGE_DATA_DIR");
    const fs::path root = env && *env ? fs::path(env) : fs::path(SQLFORGE_DATA_DIR);
    return (root / relative).string();
}

std::string resolve_path(const ExperimentConfig& config, const std::string& path) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(config.base_dir) / path).string();
}

std::vector<DetectorSpec> builtin_detectors() {
    std::vector<DetectorSpec> out;
    out.push_back({"waf_brain_stub", "ml", "", 1, {}});
    out.push_back({"cnn_waf_stub", "ml", "", 1, {}});
    for (int pl = 1; pl <= 3; ++pl) out.push_back({"rules_pl" + std::to_string(pl), "rules", "", pl, {}});
    return out;
}

// ---------------------------------------------------------------------------
// Resources and generation

Resources prepare(const ExperimentConfig& c, const RunOptions& options) {
    (void)options;
    Resources res;

    std::shared_ptr<const Embedder> base;
    if (c.embedder.kind == "http" && !c.mock)
        base = std::make_shared<HttpEmbedder>(c.embedder.http);
    else
        base = std::make_shared<HashedTrigramEmbedder>();
    res.embedder = std::make_shared<CachingEmbedder>(base);

    if (needs_provider(c.generator)) {
        if (!c.providers_file.empty()) {
            std::string text;
            try {
                text = read_file(resolve_path(c, c.providers_file));
            } catch (const Error&) {
                config_error("cannot read providers file " + c.providers_file);
            }
            for (auto pc : llm::parse_provider_configs(text)) {
                if (c.mock) {
                    pc.kind = "mock";
                    pc.seed = c.mock_seed;
                }
                res.registry.add(llm::make_provider(pc));
            }
        }
        const std::string disc = c.discriminator_provider.empty() ? c.provider : c.discriminator_provider;
        for (const std::string& id : {c.provider, disc}) {
            if (res.registry.contains(id)) continue;
            if (!c.mock && id != "mock") config_error("unknown provider '" + id + "' (no providers_file entry)");
            res.registry.add(std::make_shared<llm::MockProvider>(id, llm::MockOptions{c.mock_seed, std::nullopt, false}));
        }
    }

    std::map<std::string, std::shared_ptr<const eval::RuleSet>> rule_cache;
    for (const auto& d : c.detectors.empty() ? builtin_detectors() : c.detectors) {
        if (d.kind == "rules") {
            const std::string path = d.path.empty() ? data_path("rules/crs_subset.tsv") : resolve_path(c, d.path);
            auto& rules = rule_cache[path];
            if (!rules) {
                try {
                    rules = std::make_shared<const eval::RuleSet>(eval::RuleSet::load(path));
                } catch (const Error& e) {
                    config_error("detector " + d.id + ": " + e.what());
                }
            }
            res.detectors.push_back(std::make_shared<eval::RuleWafDetector>(d.id, rules, d.paranoia));
        } else if (d.kind == "ml") {
            const std::string path = d.path.empty() ? data_path("ml/" + d.id + ".json") : resolve_path(c, d.path);
            try {
                res.detectors.push_back(std::make_shared<eval::MlDetector>(d.id, eval::MlModel::load(path)));
            } catch (const Error& e) {
                config_error("detector " + d.id + ": " + e.what());
            }
        } else {
            res.detectors.push_back(std::make_shared<eval::RemoteDetector>(d.id, d.remote));
        }
    }

    if (c.database) res.executor = std::make_unique<eval::SqlExecutor>(*c.database);

    if (c.seeds) {
        res.seeds = gen::load_seeds(resolve_path(c, c.seeds->path), c.seeds->framing);
    } else if (c.generator == gen::GeneratorKind::template_icl || c.generator == gen::GeneratorKind::seed_only) {
        res.seeds = gen::load_seeds(data_path("seeds/v2_seeds.txt"), gen::Framing::string_context);
    }

    if (c.generator == gen::GeneratorKind::traditional)
        res.catalog = gen::load_catalog(c.catalog.empty() ? data_path("catalog/traditional.txt")
                                                          : resolve_path(c, c.catalog));

    if (c.generator == gen::GeneratorKind::radagas) {
        if (!c.knowledge.index.empty()) {
            res.index = knowledge::VectorIndex::load(resolve_path(c, c.knowledge.index));
        } else {
            std::vector<std::string> files;
            for (const auto& f : c.knowledge.files) files.push_back(resolve_path(c, f));
            if (files.empty()) files = shipped_kb_files();
            auto chunks = knowledge::chunk_files(files, c.knowledge.chunk_size, c.knowledge.chunk_overlap);
            res.index = knowledge::build_index(chunks, *res.embedder);
        }
        if (res.index->dimension() != res.embedder->dimension() && !res.index->empty())
            throw Error(ErrorKind::DimensionError, "index dimension does not match the embedder");
    }
    return res;
}

gen::GenerationResult generate(const ExperimentConfig& c, Resources& res, const gen::GenerationParams& params,
                               const std::string& cot_dir) {
    using gen::GeneratorKind;
    switch (c.generator) {
        case GeneratorKind::traditional: return gen::generate_traditional(res.catalog, params);
        case GeneratorKind::vanilla: return gen::generate_vanilla(*res.registry.get(c.provider), params);
        case GeneratorKind::template_icl:
            return gen::generate_template_icl(*res.registry.get(c.provider), *res.seeds, params);
        case GeneratorKind::radagas: {
            gen::RadagasOptions opts;
            opts.query = c.knowledge.query;
            opts.retrieval = c.knowledge.retrieval;
            opts.seeds = res.seeds ? &*res.seeds : nullptr;
            opts.executor = c.execution_gate ? res.executor.get() : nullptr;
            return gen::generate_radagas(*res.registry.get(c.provider), *res.index, res.embedder, params, opts);
        }
        case GeneratorKind::reflexqli: {
            gen::ReflexOptions opts;
            opts.seeds = res.seeds ? &*res.seeds : nullptr;
            opts.cot_dir = cot_dir;
            const std::string disc = c.discriminator_provider.empty() ? c.provider : c.discriminator_provider;
            return gen::generate_reflexqli(*res.registry.get(c.provider), *res.registry.get(disc), params, c.reflex,
                                           opts);
        }
        case GeneratorKind::seed_only: return gen::seed_only_payloads(*res.seeds, params);
    }
    throw Error(ErrorKind::InvalidParams, "unknown generator");
}

Evaluated evaluate_payloads(std::span<const std::string> payloads, Resources& res, std::size_t workers,
                            bool with_diversity) {
    Evaluated out;
    eval::MatrixOptions mo;
    mo.workers = workers;
    out.records = eval::run_evaluation_matrix(payloads, res.detectors, res.executor.get(), mo);

    std::vector<std::string> ids;
    for (const auto& d : res.detectors) ids.push_back(d->id());
    if (res.executor) ids.emplace_back(eval::kExecutorId);
    std::vector<double> present;
    for (const auto& id : ids) {
        DetectorRate rate{id, std::nullopt};
        try {
            rate.rate_pct = stats::bypass_rate(out.records, id).rate_pct;
            present.push_back(*rate.rate_pct);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoData) throw;
        }
        out.rates.push_back(rate);
    }
    if (!present.empty()) out.overall_pct = stats::overall_mean(present);

    if (with_diversity && !payloads.empty()) {
        std::vector<eval::FunctionalSignature> signatures(payloads.size());
        std::vector<bool> have(payloads.size(), false);
        for (const auto& r : out.records) {
            if (r.execution) {
                signatures[r.payload_index] = eval::classify_functional(*r.execution, payloads[r.payload_index]);
                have[r.payload_index] = true;
            }
        }
        std::unique_ptr<eval::SqlExecutor> local;
        for (std::size_t i = 0; i < payloads.size(); ++i) {
            if (have[i]) continue;
            if (!local) local = std::make_unique<eval::SqlExecutor>();
            signatures[i] = eval::classify_functional(local->execute(payloads[i]), payloads[i]);
        }
        out.diversity = diversity::score_set(payloads, signatures, res.embedder, diversity::payload_tree, workers);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Summaries

std::string summary_to_json(const ExperimentSummary& s) {
    json runs = json::array();
    for (const auto& r : s.runs) runs.push_back(run_json(r));
    json j{{"name", s.name},
           {"config_digest", s.config_digest},
           {"generator", s.generator},
           {"temperature", s.temperature},
           {"theta", s.theta},
           {"detector_ids", s.detector_ids},
           {"runs", runs},
           {"mean_pct", optional_json(s.mean_pct)},
           {"sigma_pct", optional_json(s.sigma_pct)},
           {"mean_rates", rates_json(s.mean_rates)},
           {"diversity", s.mean_diversity ? report_json(*s.mean_diversity) : json(nullptr)},
           {"partial", s.partial},
           {"complete", s.complete},
           {"error", s.error}};
    return json_text(j);
}

ExperimentSummary summary_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        ExperimentSummary s;
        s.name = j.at("name").get<std::string>();
        s.config_digest = j.at("config_digest").get<std::string>();
        s.generator = j.at("generator").get<std::string>();
        s.temperature = j.at("temperature").get<double>();
        s.theta = j.at("theta").get<double>();
        s.detector_ids = j.at("detector_ids").get<std::vector<std::string>>();
        for (const auto& r : j.at("runs")) s.runs.push_back(run_from(r));
        s.mean_pct = optional_from(j, "mean_pct");
        s.sigma_pct = optional_from(j, "sigma_pct");
        s.mean_rates = rates_from(j.at("mean_rates"));
        if (!j.at("diversity").is_null()) s.mean_diversity = report_from_json(j.at("diversity"));
        s.partial = j.at("partial").get<bool>();
        s.complete = j.at("complete").get<bool>();
        s.error = j.at("error").get<std::string>();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("bad summary: ") + e.what());
    }
}

ExperimentSummary load_summary(const std::string& path) {
    const fs::path p = fs::is_directory(path) ? fs::path(path) / "summary.json" : fs::path(path);
    return summary_from_json(read_file(p.string()));
}

namespace {

void finalize(ExperimentSummary& s) {
    std::vector<double> overall;
    for (const auto& r : s.runs)
        if (r.overall_pct) overall.push_back(*r.overall_pct);
    if (!overall.empty()) {
        auto rs = stats::summarize_runs(s.config_digest, overall);
        s.mean_pct = rs.mean_pct;
        s.sigma_pct = rs.sigma_pct;
    }
    s.mean_rates.clear();
    for (const auto& id : s.detector_ids) {
        std::vector<double> v;
        for (const auto& r : s.runs)
            for (const auto& rate : r.rates)
                if (rate.detector_id == id && rate.rate_pct) v.push_back(*rate.rate_pct);
        s.mean_rates.push_back({id, v.empty() ? std::nullopt : std::optional(mean_of(v))});
    }
    std::vector<diversity::DiversityReport> reps;
    for (const auto& r : s.runs)
        if (r.diversity) reps.push_back(*r.diversity);
    if (!reps.empty()) {
        diversity::DiversityReport m;
        const double k = static_cast<double>(reps.size());
        for (const auto& d : reps) {
            m.uniqueness_pct += d.uniqueness_pct / k;
            m.semantic += d.semantic / k;
            m.lexical += d.lexical / k;
            m.contextual += d.contextual / k;
            m.ngram += d.ngram / k;
            m.ast += d.ast / k;
            m.functional += d.functional / k;
            m.total += d.total / k;
        }
        s.mean_diversity = m;
    }
    s.partial = std::any_of(s.runs.begin(), s.runs.end(), [](const RunResult& r) { return r.produced < r.requested; });
}

void say(const RunOptions& o, const std::string& msg) {
    if (o.log) o.log(msg);
}

}  // namespace

ExperimentSummary run_experiment(const ExperimentConfig& c, const RunOptions& options) {
    ExperimentSummary s;
    s.name = c.name;
    s.config_digest = config_digest(c);
    s.generator = std::string(gen::to_string(c.generator));
    s.temperature = c.temperature;
    s.theta = c.theta;

    const fs::path root = fs::path(c.output_dir) / s.config_digest;
    Resources res;
    try {
        res = prepare(c, options);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InfrastructureError) throw;
        s.error = e.what();
        fs::create_directories(root);
        write_file((root / "summary.json").string(), summary_to_json(s));
        return s;
    }
    for (const auto& d : res.detectors) s.detector_ids.push_back(d->id());
    if (res.executor) s.detector_ids.emplace_back(eval::kExecutorId);

    fs::create_directories(root);
    write_file((root / "config.json").string(), json_text(json::parse(canonical_config(c))));

    try {
        for (std::size_t k = 0; k < c.runs; ++k) {
            const fs::path dir = root / ("run_" + std::to_string(k));
            fs::create_directories(dir);
            gen::GenerationParams params;
            params.n = c.n;
            params.temperature = c.temperature;
            params.theta = c.theta;
            params.rng_seed = c.rng_seed + k;
            params.run_id = "run_" + std::to_string(k);
            params.config_digest = s.config_digest;
            std::string cot;
            if (c.generator == gen::GeneratorKind::reflexqli) {
                cot = (dir / "cot").string();
                fs::create_directories(cot);
            }
            say(options, s.name + " [" + s.config_digest + "] run " + std::to_string(k) + ": generating");
            gen::GenerationResult g = generate(c, res, params, cot);
            write_file((dir / "payloads.jsonl").string(), gen::write_jsonl(g.payloads));

            std::vector<std::string> texts;
            texts.reserve(g.payloads.size());
            for (const auto& p : g.payloads) texts.push_back(p.text);
            say(options, s.name + " [" + s.config_digest + "] run " + std::to_string(k) + ": evaluating " +
                             std::to_string(texts.size()) + " payloads");
            Evaluated ev = evaluate_payloads(texts, res, c.workers, true);

            std::string csv = eval::records_csv_header();
            for (const auto& r : ev.records) csv += eval::record_csv_line(r);
            write_file((dir / "evaluation.csv").string(), csv);
            if (ev.diversity) {
                write_file((dir / "diversity.csv").string(), diversity::report_csv_header() + "\n" +
                                                                 diversity::report_csv_line(ev.diversity->report) + "\n");
                std::string detail = diversity::detail_csv_header() + "\n";
                for (const auto& row : ev.diversity->detail) detail += diversity::detail_csv_line(row) + "\n";
                write_file((dir / "diversity_detail.csv").string(), detail);
            }

            RunResult rr;
            rr.run_index = k;
            rr.requested = g.requested;
            rr.produced = g.payloads.size();
            rr.stats = g.stats;
            rr.rates = ev.rates;
            rr.overall_pct = ev.overall_pct;
            if (ev.diversity) rr.diversity = ev.diversity->report;
            write_file((dir / "run.json").string(), json_text(run_json(rr)));
            if (g.partial())
                say(options, s.name + " run " + std::to_string(k) + ": partial, " + std::to_string(g.shortfall()) +
                                 " payloads short");
            s.runs.push_back(std::move(rr));
        }
        s.complete = true;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InfrastructureError) throw;
        s.error = e.what();
        say(options, s.name + ": aborted: " + s.error);
    }
    finalize(s);
    write_file((root / "summary.json").string(), summary_to_json(s));
    return s;
}

// ---------------------------------------------------------------------------
// Grid

void sort_grid_rows(std::vector<GridRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
        if (a.mean_pct.has_value() != b.mean_pct.has_value()) return a.mean_pct.has_value();
        if (a.mean_pct && *a.mean_pct != *b.mean_pct) return *a.mean_pct > *b.mean_pct;
        if (a.theta != b.theta) return a.theta < b.theta;
        return a.temperature < b.temperature;
    });
}

std::string grid_csv(std::span<const GridRow> rows) {
    std::string out = "model,theta,temperature,mean_pct,sigma_pct,config_digest,error\n";
    for (const auto& r : rows)
        out += csv_field(r.model) + "," + fixed(r.theta, 2) + "," + fixed(r.temperature, 2) + "," +
               cell(r.mean_pct, 4) + "," + cell(r.sigma_pct, 4) + "," + r.config_digest + "," + csv_field(r.error) +
               "\n";
    return out;
}

GridResult run_grid(const ExperimentConfig& base, const GridAxes& axes, const RunOptions& options) {
    if (axes.temperatures.empty() || axes.thetas.empty())
        throw Error(ErrorKind::InvalidParams, "grid needs at least one temperature and one theta");

    std::vector<ExperimentConfig> configs;
    for (double theta : axes.thetas) {
        for (double t : axes.temperatures) {
            ExperimentConfig c = base;
            c.theta = theta;
            c.temperature = t;
            configs.push_back(std::move(c));
        }
    }
    const std::string model = axes.model.empty() ? base.provider : axes.model;

    std::vector<GridRow> rows(configs.size());
    std::vector<ExperimentSummary> summaries(configs.size());
    std::mutex log_mutex;
    RunOptions inner = options;
    if (options.log)
        inner.log = [&](const std::string& m) {
            std::lock_guard lock(log_mutex);
            options.log(m);
        };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < configs.size(); i = next.fetch_add(1)) {
            const ExperimentConfig& c = configs[i];
            GridRow& row = rows[i];
            row.model = model;
            row.theta = c.theta;
            row.temperature = c.temperature;
            row.config_digest = config_digest(c);
            const fs::path summary_path = fs::path(c.output_dir) / row.config_digest / "summary.json";
            try {
                ExperimentSummary s;
                bool resumed = false;
                if (options.resume && fs::exists(summary_path)) {
                    try {
                        s = load_summary(summary_path.string());
                        resumed = s.complete;
                    } catch (const Error&) {
                    }
                }
                if (resumed)
                    say(inner, "skipping completed config " + row.config_digest);
                else
                    s = run_experiment(c, inner);
                row.mean_pct = s.mean_pct;
                row.sigma_pct = s.sigma_pct;
                row.error = s.error;
                summaries[i] = std::move(s);
            } catch (const std::exception& e) {
                row.error = e.what();
                summaries[i].config_digest = row.config_digest;
                summaries[i].name = c.name;
                summaries[i].error = e.what();
                say(inner, "config " + row.config_digest + " failed: " + row.error);
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t n = std::min(std::max<std::size_t>(axes.pool, 1), configs.size());
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    }

    GridResult result;
    result.rows = rows;
    sort_grid_rows(result.rows);
    result.summaries = std::move(summaries);
    fs::create_directories(base.output_dir);
    write_file((fs::path(base.output_dir) / "grid.csv").string(), grid_csv(result.rows));
    return result;
}

// ---------------------------------------------------------------------------
// Tables

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
}

CsvTable parse_csv_table(std::string_view text) {
    CsvTable t;
    bool first = true;
    for (const auto& line : split_lines(text)) {
        if (trim(line).empty()) continue;
        auto fields = parse_csv_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
            continue;
        }
        if (fields.size() != t.header.size())
            throw Error(ErrorKind::ParseError, "row has " + std::to_string(fields.size()) + " fields, header has " +
                                                   std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    if (first) throw Error(ErrorKind::ParseError, "empty table");
    return t;
}

std::string to_csv(const CsvTable& t) {
    auto line = [](const std::vector<std::string>& fields) {
        std::string out;
        for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
        return out + "\n";
    };
    std::string out = line(t.header);
    for (const auto& r : t.rows) out += line(r);
    return out;
}

std::string to_text(const CsvTable& t, std::string_view title) {
    std::vector<std::size_t> width(t.header.size(), 0);
    for (std::size_t i = 0; i < t.header.size(); ++i) width[i] = t.header[i].size();
    for (const auto& r : t.rows)
        for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    auto line = [&](const std::vector<std::string>& fields) {
        std::string out;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const std::string pad(width[i] - fields[i].size(), ' ');
            if (i) out += "  ";
            out += i == 0 ? fields[i] + pad : pad + fields[i];
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    std::string out;
    if (!title.empty()) out += std::string(title) + "\n";
    out += line(t.header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w;
    out += std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') + "\n";
    for (const auto& r : t.rows) out += line(r);
    return out;
}

std::vector<stats::CorrelationRow> correlation_table(const CsvTable& t) {
    auto bypass = t.column("bypass");
    if (!bypass) bypass = t.column("bypass_pct");
    if (!bypass) throw Error(ErrorKind::InvalidParams, "table has no bypass column");
    if (t.header.size() < 3) throw Error(ErrorKind::InvalidParams, "table has no metric columns");

    auto column_values = [&](std::size_t c) {
        std::vector<double> v;
        for (const auto& r : t.rows) v.push_back(to_double(r[c], t.header[c]));
        return v;
    };
    const std::vector<double> y = column_values(*bypass);
    std::vector<stats::CorrelationRow> out;
    for (std::size_t c = 1; c < t.header.size(); ++c) {
        if (c == *bypass) continue;
        out.push_back(stats::correlate(t.header[c], column_values(c), y));
    }
    static constexpr std::array<std::string_view, 6> kSix = {"semantic", "lexical", "contextual",
                                                             "ngram",    "ast",     "functional"};
    const bool has_six = std::all_of(kSix.begin(), kSix.end(), [&](std::string_view m) { return t.column(m); });
    if (has_six && !t.column("total")) {
        std::vector<double> total(t.rows.size(), 0.0);
        for (auto m : kSix) {
            const auto v = column_values(*t.column(m));
            for (std::size_t i = 0; i < v.size(); ++i) total[i] += v[i] / 6.0;
        }
        out.push_back(stats::correlate("total", total, y));
    }
    return out;
}

CsvTable correlation_csv(std::span<const stats::CorrelationRow> rows) {
    std::string text = stats::correlation_csv_header() + "\n";
    for (const auto& r : rows) text += stats::correlation_csv_line(r) + "\n";
    return parse_csv_table(text);
}

WafMatrix waf_matrix(std::span<const ExperimentSummary> summaries) {
    WafMatrix m;
    std::vector<std::string> ids;
    for (const auto& s : summaries)
        for (const auto& id : s.detector_ids)
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);

    auto rate_of = [](const ExperimentSummary& s, const std::string& id) -> std::optional<double> {
        for (const auto& r : s.mean_rates)
            if (r.detector_id == id) return r.rate_pct;
        return std::nullopt;
    };
    std::vector<std::string> kept;
    for (const auto& id : ids) {
        const bool any = std::any_of(summaries.begin(), summaries.end(),
                                     [&](const ExperimentSummary& s) { return rate_of(s, id).has_value(); });
        if (any)
            kept.push_back(id);
        else
            m.warnings.push_back("detector " + id + " has no results; column omitted");
    }
    m.table.header.push_back("system");
    for (const auto& id : kept) m.table.header.push_back(id);
    m.table.header.push_back("overall_mean");
    for (const auto& s : summaries) {
        std::vector<std::string> row{s.name};
        std::vector<double> cells;
        for (const auto& id : kept) {
            auto v = rate_of(s, id);
            row.push_back(cell(v, 2));
            if (v) cells.push_back(*v);
        }
        row.push_back(cells.empty() ? "" : fixed(stats::overall_mean(cells), 2));
        m.table.rows.push_back(std::move(row));
    }
    return m;
}

CsvTable diversity_table(std::span<const ExperimentSummary> summaries) {
    CsvTable t;
    t.header = {"system", "bypass",     "uniqueness", "semantic", "lexical",
                "contextual", "ngram", "ast",        "functional", "total"};
    for (const auto& s : summaries) {
        if (!s.mean_diversity || !s.mean_pct) continue;
        const auto& d = *s.mean_diversity;
        t.rows.push_back({s.name, fixed(*s.mean_pct, 2), fixed(d.uniqueness_pct, 2), fixed(d.semantic, 4),
                          fixed(d.lexical, 4), fixed(d.contextual, 4), fixed(d.ngram, 4), fixed(d.ast, 4),
                          fixed(d.functional, 4), fixed(d.total, 4)});
    }
    return t;
}

std::vector<std::pair<std::string, CsvTable>> load_reference_tables(const std::string& reference_dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(reference_dir, ec))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::pair<std::string, CsvTable>> out;
    for (const auto& f : files) out.emplace_back(f.stem().string(), parse_csv_table(read_file(f.string())));
    return out;
}

std::vector<std::string> emit_report(std::span<const ExperimentSummary> summaries, const std::string& out_dir,
                                     ReportFormat format, const std::string& reference_dir,
                                     std::vector<std::string>* warnings) {
    if (summaries.empty()) throw Error(ErrorKind::NoData, "no summaries to report");
    std::vector<std::string> warn;
    WafMatrix matrix = waf_matrix(summaries);
    warn.insert(warn.end(), matrix.warnings.begin(), matrix.warnings.end());
    CsvTable div = diversity_table(summaries);

    std::optional<CsvTable> corr;
    if (div.rows.size() >= 3) {
        try {
            corr = correlation_csv(correlation_table(div));
        } catch (const Error& e) {
            warn.push_back(std::string("correlation table skipped: ") + e.what());
        }
    } else {
        warn.push_back("correlation table needs at least 3 systems with diversity data");
    }
    std::vector<std::pair<std::string, CsvTable>> refs;
    if (!reference_dir.empty()) refs = load_reference_tables(reference_dir);

    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& body) {
        const std::string path = (fs::path(out_dir) / name).string();
        write_file(path, body);
        written.push_back(path);
    };
    if (format == ReportFormat::csv) {
        put("waf_matrix.csv", to_csv(matrix.table));
        if (!div.rows.empty()) put("diversity.csv", to_csv(div));
        if (corr) put("correlations.csv", to_csv(*corr));
        for (const auto& [name, table] : refs) put("reference_" + name + ".csv", to_csv(table));
    } else {
        std::string text = to_text(matrix.table, "Per-detector bypass rates (%), measured") + "\n";
        for (const auto& [name, table] : refs)
            if (name.find("waf_bypass_matrix") != std::string::npos)
                text += to_text(table, "Per-detector bypass rates (%), published reference: " + name) + "\n";
        if (!div.rows.empty()) text += to_text(div, "Diversity metrics, measured") + "\n";
        if (corr) text += to_text(*corr, "Diversity versus bypass correlations, measured") + "\n";
        for (const auto& [name, table] : refs)
            if (name.find("waf_bypass_matrix") == std::string::npos)
                text += to_text(table, "Published reference: " + name) + "\n";
        for (const auto& w : warn) text += "warning: " + w + "\n";
        put("report.txt", text);
    }
    if (warnings) *warnings = warn;
    return written;
}

// ---------------------------------------------------------------------------
// Seed ablation

CsvTable AblationResult::summary_table() const {
    CsvTable t;
    t.header = {"system", "mean_pct", "sigma_pct", "exec_pct", "delta_vs_seed"};
    t.rows.push_back({"seed_only", fixed(seed_mean_pct, 2), "", cell(seed_exec_pct, 2), ""});
    for (const auto& s : systems) {
        const std::string sign = s.delta_vs_seed >= 0.0 ? "+" : "";
        t.rows.push_back({s.name, fixed(s.mean_pct, 2), cell(s.sigma_pct, 2), cell(s.exec_pct, 2),
                          sign + fixed(s.delta_vs_seed, 2)});
    }
    return t;
}

CsvTable AblationResult::per_target_table() const {
    CsvTable t;
    t.header.push_back("target");
    std::vector<std::vector<DetectorRate>> columns;
    if (systems.empty()) {
        t.header.push_back("seed_only");
        columns.push_back(seed_rates);
    }
    for (const auto& s : systems) {
        t.header.push_back(s.name);
        columns.push_back(s.rates);
    }
    const bool with_delta = systems.size() == 2;
    if (with_delta) t.header.push_back("delta");

    std::vector<std::string> ids;
    for (const auto& col : columns)
        for (const auto& r : col)
            if (std::find(ids.begin(), ids.end(), r.detector_id) == ids.end()) ids.push_back(r.detector_id);
    auto lookup = [](const std::vector<DetectorRate>& col, const std::string& id) -> std::optional<double> {
        for (const auto& r : col)
            if (r.detector_id == id) return r.rate_pct;
        return std::nullopt;
    };
    std::vector<std::vector<double>> present(columns.size());
    for (const auto& id : ids) {
        std::vector<std::string> row{id};
        std::vector<std::optional<double>> vals;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            vals.push_back(lookup(columns[c], id));
            row.push_back(cell(vals.back(), 2));
            if (vals.back()) present[c].push_back(*vals.back());
        }
        if (with_delta) {
            if (vals[0] && vals[1]) {
                const double d = *vals[1] - *vals[0];
                row.push_back((d >= 0.0 ? "+" : "") + fixed(d, 2));
            } else {
                row.push_back("");
            }
        }
        t.rows.push_back(std::move(row));
    }
    std::vector<std::string> mean_row{"mean"};
    std::vector<std::optional<double>> means;
    for (const auto& p : present) {
        means.push_back(p.empty() ? std::nullopt : std::optional(stats::overall_mean(p)));
        mean_row.push_back(cell(means.back(), 2));
    }
    if (with_delta) {
        if (means[0] && means[1]) {
            const double d = *means[1] - *means[0];
            mean_row.push_back((d >= 0.0 ? "+" : "") + fixed(d, 2));
        } else {
            mean_row.push_back("");
        }
    }
    t.rows.push_back(std::move(mean_row));
    return t;
}

AblationResult run_seed_ablation(const SeedSpec& seeds, const ExperimentConfig& evaluation_config,
                                 std::span<const ExperimentConfig> systems, const RunOptions& options) {
    ExperimentConfig ec = evaluation_config;
    ec.generator = gen::GeneratorKind::seed_only;
    ec.seeds = seeds;
    Resources res = prepare(ec, options);
    if (!res.seeds || res.seeds->seeds.empty()) throw Error(ErrorKind::SeedError, "seed list is empty");

    AblationResult out;
    const auto framed = gen::framed_seeds(*res.seeds);
    say(options, "seed-only: evaluating " + std::to_string(framed.size()) + " framed seeds");
    Evaluated ev = evaluate_payloads(framed, res, ec.workers, false);
    if (!ev.overall_pct) throw Error(ErrorKind::NoData, "no detector produced a verdict for the seeds");
    out.seed_rates = ev.rates;
    out.seed_mean_pct = *ev.overall_pct;
    for (const auto& r : ev.rates)
        if (r.detector_id == eval::kExecutorId) out.seed_exec_pct = r.rate_pct;

    for (const auto& base : systems) {
        ExperimentConfig c = base;
        c.seeds = seeds;
        if (c.seeds && !fs::path(c.seeds->path).is_absolute())
            c.seeds->path = fs::absolute(resolve_path(ec, seeds.path)).string();
        ExperimentSummary s = run_experiment(c, options);
        if (!s.error.empty()) throw Error(ErrorKind::InfrastructureError, c.name + ": " + s.error);
        if (!s.mean_pct) throw Error(ErrorKind::NoData, c.name + ": no bypass data");
        AblationSystem sys;
        sys.name = s.name;
        sys.mean_pct = *s.mean_pct;
        sys.sigma_pct = s.sigma_pct;
        sys.delta_vs_seed = sys.mean_pct - out.seed_mean_pct;
        sys.rates = s.mean_rates;
        for (const auto& r : s.mean_rates)
            if (r.detector_id == eval::kExecutorId) sys.exec_pct = r.rate_pct;
        out.systems.push_back(std::move(sys));
    }
    return out;
}

}  // namespace sqlforge::runner
