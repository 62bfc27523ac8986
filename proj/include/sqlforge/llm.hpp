#pragma once
// Chat-completion providers (deterministic mock, OpenAI-compatible HTTP),
// prompt templates and payload extraction from model output.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sqlforge::llm {

struct ChatRequest {
    std::string provider_id;
    std::string prompt;
    double temperature = 0.7;  // [0, 2]
    std::size_t max_output_chars = 16000;
    std::uint64_t seed = 0;  // mock determinism only
};

struct ChatResponse {
    std::string text;
    std::string provider_id;
    std::int64_t latency_ms = 0;
};

/// Guardrail refusal. Never represented as an empty ChatResponse.
struct Refusal {
    std::string provider_id;
    std::string message;
};

using ChatOutcome = std::variant<ChatResponse, Refusal>;

/// Throws InvalidParams for an empty prompt or temperature outside [0, 2].
void validate(const ChatRequest& request);

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual const std::string& id() const = 0;
    /// Thread-safe. Throws ProviderError when the backend cannot answer.
    virtual ChatOutcome complete(const ChatRequest& request) const = 0;
};

// ---------------------------------------------------------------------------
// Prompt templates

enum class TemplateId {
    radagas,
    vanilla_zero_shot,
    template_icl,
    reflex_analysis,
    reflex_strategy,
    reflex_design,
    reflex_refine,
    discriminator_score,
};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_from_string(std::string_view name);
std::span<const TemplateId> all_templates();

struct PromptTemplate {
    TemplateId id;
    std::string_view body;  // `{{name}}` placeholders
};

const PromptTemplate& prompt_template(TemplateId id);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

/// Single-pass substitution: bound text is never re-scanned. Throws
/// TemplateError naming every unbound placeholder.
std::string render(std::string_view body, const Bindings& bindings);
std::string render_prompt(TemplateId id, const Bindings& bindings);

/// "- item" lines for an `<examples>` or `<accepted>` block.
std::string bullet_list(std::span<const std::string> items);

// ---------------------------------------------------------------------------
// Output contract

/// Numbered lines ("1. payload") anywhere in the text, or every non-empty
/// line of fenced ``` blocks. Markers and surrounding whitespace are
/// stripped, empty results dropped, duplicates kept.
std::vector<std::string> extract_payloads(std::string_view text);

/// Inverse of extract_payloads for newline-free payloads.
std::string format_numbered(std::span<const std::string> payloads);

// ---------------------------------------------------------------------------
// Mock provider

struct MockOptions {
    std::uint64_t seed = 0;
    std::optional<int> fixed_discriminator_score;
    bool refuse_all = false;
};

/// Pure function of (provider seed, request seed, prompt hash, temperature
/// rounded to 0.01). Dispatches on the `[task:...]` tag at the start of
/// each template.
class MockProvider final : public ChatProvider {
public:
    explicit MockProvider(std::string id = "mock", MockOptions options = {});
    const std::string& id() const override { return id_; }
    ChatOutcome complete(const ChatRequest& request) const override;

    static std::span<const std::string_view> catalog();
    static std::span<const std::string_view> signatures();
    /// Count of signatures found in the lowercased payload, capped at 10.
    static int signature_score(std::string_view payload);

    /// Applies floor(3T) mutation operators plus one more with probability
    /// frac(3T). `applied`, when given, receives the operator count.
    static std::string mutate(std::string_view base, double temperature, std::uint64_t seed,
                              int* applied = nullptr);

private:
    std::string id_;
    MockOptions options_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP provider

struct HttpProviderConfig {
    std::string id;
    std::string endpoint;  // full chat-completions URL
    std::string model;
    std::string auth_env;  // env var with the bearer token; may be empty
    std::size_t max_in_flight = 4;
    int timeout_ms = 60000;
    int max_attempts = 3;
    int backoff_initial_ms = 1000;
};

class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(HttpProviderConfig config);
    ~HttpChatProvider() override;
    const std::string& id() const override { return config_.id; }
    ChatOutcome complete(const ChatRequest& request) const override;

private:
    struct Gate;
    HttpProviderConfig config_;
    std::unique_ptr<Gate> gate_;
};

// ---------------------------------------------------------------------------
// Configuration

struct ProviderConfig {
    std::string id;
    std::string kind;  // "mock" or "openai"
    std::string endpoint;
    std::string model;
    std::string auth_env;
    std::size_t max_in_flight = 4;
    int timeout_ms = 60000;
    std::uint64_t seed = 0;
};

/// JSON: {"providers": [{"id": ..., "kind": ..., ...}]}. Unknown keys and
/// inline credentials are ConfigError.
std::vector<ProviderConfig> parse_provider_configs(std::string_view json_text);

std::shared_ptr<ChatProvider> make_provider(const ProviderConfig& config);

class ProviderRegistry {
public:
    void add(std::shared_ptr<ChatProvider> provider);
    /// Throws ConfigError for an unknown id.
    std::shared_ptr<ChatProvider> get(std::string_view id) const;
    bool contains(std::string_view id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, std::shared_ptr<ChatProvider>, std::less<>> providers_;
};

/// Routes by request.provider_id after validation.
ChatOutcome complete(const ProviderRegistry& registry, const ChatRequest& request);

}  // namespace sqlforge::llm
