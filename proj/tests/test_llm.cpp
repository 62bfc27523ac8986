#include "sqlforge/error.hpp"
#include "sqlforge/llm.hpp"

#include <catch_amalgamated.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace sqlforge;
using namespace sqlforge::llm;

namespace {

bool has_kind(const Error& e, ErrorKind k) { return e.kind() == k; }

std::string text_of(const ChatOutcome& o) {
    REQUIRE(std::holds_alternative<ChatResponse>(o));
    return std::get<ChatResponse>(o).text;
}

ChatRequest req(std::string prompt, double t, std::uint64_t seed = 0) {
    ChatRequest r;
    r.provider_id = "mock";
    r.prompt = std::move(prompt);
    r.temperature = t;
    r.seed = seed;
    return r;
}

class ChatServer {
public:
    ChatServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            last_auth = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            last_model = body.value("model", "");
            if (fail_first > 0) {
                --fail_first;
                res.status = 503;
                return;
            }
            nlohmann::json msg = {{"role", "assistant"}, {"content", reply}};
            nlohmann::json choice = {{"index", 0}, {"message", msg}, {"finish_reason", finish}};
            res.set_content(nlohmann::json{{"choices", {choice}}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }

    std::atomic<int> hits{0};
    std::atomic<int> fail_first{0};
    std::string reply = "1. ' OR 1=1--";
    std::string finish = "stop";
    std::string last_auth;
    std::string last_model;

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace

TEST_CASE("request validation") {
    CHECK_THROWS_AS(validate(req("", 0.5)), Error);
    CHECK_THROWS_AS(validate(req("x", -0.1)), Error);
    CHECK_THROWS_AS(validate(req("x", 2.1)), Error);
    CHECK_NOTHROW(validate(req("x", 2.0)));
}

TEST_CASE("every template is registered and named") {
    CHECK(all_templates().size() == 8);
    for (auto id : all_templates()) {
        CHECK(template_from_string(to_string(id)) == id);
        CHECK_FALSE(prompt_template(id).body.empty());
    }
    CHECK_FALSE(template_from_string("nope").has_value());
}

TEST_CASE("placeholders and rendering") {
    CHECK(placeholders("a {{x}} b {{y}} {{x}}") == std::vector<std::string>{"x", "y"});
    CHECK(render("no placeholders here", {}) == "no placeholders here");
    CHECK(render("{{a}}-{{b}}", {{"a", "1"}, {"b", "2"}}) == "1-2");
    // Bound text is not re-scanned.
    CHECK(render("{{a}}", {{"a", "{{b}}"}, {"b", "nope"}}) == "{{b}}");
}

TEST_CASE("missing bindings are all named") {
    try {
        render("{{a}} {{b}} {{c}}", {{"b", "x"}});
        FAIL("expected TemplateError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TemplateError);
        const std::string what = e.what();
        CHECK(what.find('a') != std::string::npos);
        CHECK(what.find('c') != std::string::npos);
    }
}

TEST_CASE("radagas prompt carries every context chunk") {
    const auto p = render_prompt(TemplateId::radagas, {{"query", "q"},
                                                       {"context", "CHUNK-ONE\nCHUNK-TWO\nCHUNK-THREE"},
                                                       {"examples", ""},
                                                       {"accepted", ""},
                                                       {"count", "10"}});
    for (const char* c : {"CHUNK-ONE", "CHUNK-TWO", "CHUNK-THREE"}) CHECK(p.find(c) != std::string::npos);
}

TEST_CASE("bullet list") {
    CHECK(bullet_list(std::vector<std::string>{"a", "b"}) == "- a\n- b");
}

TEST_CASE("payload extraction") {
    CHECK(extract_payloads("1. ' OR 1=1--\n2. \" OR \"\"=\"") == std::vector<std::string>{"' OR 1=1--", "\" OR \"\"=\""});
    CHECK(extract_payloads("I cannot think of anything useful to say.").empty());
    CHECK(extract_payloads("Here:\n```sql\na\nb\n\nc\n```\nthanks").size() == 3);
    CHECK(extract_payloads("1) x\n 2.   y  \n3.\n").size() == 2);
    CHECK(extract_payloads("1. dup\n2. dup").size() == 2);
}

TEST_CASE("numbered formatting round trips") {
    const std::vector<std::string> payloads = {"' OR 1=1--", "admin'#", "1. looks numbered", "```"};
    CHECK(extract_payloads(format_numbered(payloads)) == payloads);
}

TEST_CASE("mock is a pure function of its inputs") {
    const MockProvider m("mock", {7});
    const auto p = render_prompt(TemplateId::vanilla_zero_shot, {{"count", "5"}});
    CHECK(text_of(m.complete(req(p, 0.7, 3))) == text_of(m.complete(req(p, 0.7, 3))));
    CHECK(text_of(m.complete(req(p, 0.9))) != text_of(m.complete(req(p, 0.1))));
    CHECK(text_of(m.complete(req(p, 0.7, 1))) != text_of(m.complete(req(p, 0.7, 2))));
    const MockProvider other("mock", {8});
    CHECK(text_of(m.complete(req(p, 0.7))) != text_of(other.complete(req(p, 0.7))));
}

TEST_CASE("mock at zero temperature returns catalog templates verbatim") {
    const MockProvider m("mock", {7});
    const auto p = render_prompt(TemplateId::vanilla_zero_shot, {{"count", "10"}});
    const auto payloads = extract_payloads(text_of(m.complete(req(p, 0.0))));
    REQUIRE_FALSE(payloads.empty());
    const auto cat = MockProvider::catalog();
    for (const auto& pl : payloads) {
        INFO(pl);
        CHECK(std::find(cat.begin(), cat.end(), pl) != cat.end());
    }
}

TEST_CASE("mutation count follows temperature") {
    int applied = -1;
    CHECK(MockProvider::mutate("' OR 1=1--", 0.0, 5, &applied) == "' OR 1=1--");
    CHECK(applied == 0);
    for (std::uint64_t s = 0; s < 50; ++s) {
        MockProvider::mutate("' OR 1=1--", 1.0, s, &applied);
        CHECK(applied == 3);
        MockProvider::mutate("' OR 1=1--", 0.5, s, &applied);
        CHECK((applied == 1 || applied == 2));
    }
}

TEST_CASE("signature scoring") {
    CHECK(MockProvider::signature_score("hello") == 0);
    CHECK(MockProvider::signature_score("' OR 1=1--") == 4);
    CHECK(MockProvider::signature_score(
              "' or 1=1-- # /* union select sleep( benchmark( information_schema concat( char( 0x") == 10);
}

TEST_CASE("mock discriminator answers with the signature count") {
    const MockProvider m("mock", {1});
    const auto p = render_prompt(TemplateId::discriminator_score, {{"payload", "' OR 1=1--"}, {"waf_profile", "x"}});
    const auto text = text_of(m.complete(req(p, 0.0)));
    CHECK(text.rfind("4", 0) == 0);

    MockOptions fixed;
    fixed.fixed_discriminator_score = 9;
    const MockProvider f("mock", fixed);
    CHECK(text_of(f.complete(req(p, 0.0))).rfind("9", 0) == 0);
}

TEST_CASE("refusing mock") {
    MockOptions o;
    o.refuse_all = true;
    const MockProvider m("mock", o);
    const auto out = m.complete(req("anything", 0.5));
    REQUIRE(std::holds_alternative<Refusal>(out));
    CHECK_FALSE(std::get<Refusal>(out).message.empty());
}

TEST_CASE("http provider talks to an OpenAI-compatible endpoint") {
    ChatServer server;
    ::setenv("SQLFORGE_TEST_TOKEN", "t0ken", 1);
    HttpProviderConfig cfg;
    cfg.id = "local";
    cfg.endpoint = server.url();
    cfg.model = "test-model";
    cfg.auth_env = "SQLFORGE_TEST_TOKEN";
    cfg.timeout_ms = 2000;
    cfg.backoff_initial_ms = 1;
    HttpChatProvider p(cfg);

    ChatRequest r = req("hi", 0.3);
    r.provider_id = "local";
    CHECK(text_of(p.complete(r)) == "1. ' OR 1=1--");
    CHECK(server.last_auth == "Bearer t0ken");
    CHECK(server.last_model == "test-model");

    server.fail_first = 2;
    server.hits = 0;
    CHECK(text_of(p.complete(r)) == "1. ' OR 1=1--");
    CHECK(server.hits == 3);

    server.fail_first = 5;
    CHECK_THROWS_MATCHES(p.complete(r), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) { return has_kind(e, ErrorKind::ProviderError); }));
    server.fail_first = 0;

    server.finish = "content_filter";
    CHECK(std::holds_alternative<Refusal>(p.complete(r)));
    ::unsetenv("SQLFORGE_TEST_TOKEN");
}

TEST_CASE("unreachable http provider is a provider error") {
    HttpProviderConfig cfg;
    cfg.id = "dead";
    cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    cfg.model = "m";
    cfg.timeout_ms = 300;
    cfg.max_attempts = 2;
    cfg.backoff_initial_ms = 1;
    HttpChatProvider p(cfg);
    ChatRequest r = req("hi", 0.3);
    r.provider_id = "dead";
    CHECK_THROWS_AS(p.complete(r), Error);
}

TEST_CASE("provider configs") {
    const auto cfgs = parse_provider_configs(
        R"({"providers": [{"id": "m", "kind": "mock", "seed": 3},
                          {"id": "o", "kind": "openai", "endpoint": "http://127.0.0.1:8080/v1/chat/completions",
                           "model": "x", "auth_env": "TOKEN_VAR"}]})");
    REQUIRE(cfgs.size() == 2);
    CHECK(cfgs[0].seed == 3);
    CHECK(cfgs[1].auth_env == "TOKEN_VAR");
    CHECK_THROWS_AS(parse_provider_configs(R"({"providers": [{"id": "o", "kind": "openai", "endpoint": "e", "model": "x", "api_key": "sk"}]})"),
                    Error);
    CHECK_THROWS_AS(parse_provider_configs(R"({"providers": [{"id": "m", "kind": "mock", "colour": 1}]})"), Error);
    CHECK_THROWS_AS(parse_provider_configs(R"({"providers": [{"id": "m", "kind": "other"}]})"), Error);
}

TEST_CASE("registry routing") {
    ProviderRegistry reg;
    reg.add(std::make_shared<MockProvider>("a", MockOptions{1}));
    reg.add(make_provider({"b", "mock", "", "", "", 4, 1000, 2}));
    CHECK(reg.contains("a"));
    CHECK(reg.ids() == std::vector<std::string>{"a", "b"});
    CHECK_THROWS_AS(reg.get("zzz"), Error);
    ChatRequest r = req("[task:vanilla] go", 0.2);
    r.provider_id = "b";
    CHECK(std::holds_alternative<ChatResponse>(complete(reg, r)));
    r.provider_id = "nope";
    CHECK_THROWS_AS(complete(reg, r), Error);
}
