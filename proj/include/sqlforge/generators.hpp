#pragma once
// Payload generators: catalog sampler, zero-shot and in-context baselines,
// retrieval-augmented generation with diversity gating, and the dual-model
// chain-of-thought generator with an adversarial discriminator.

#include "sqlforge/diversity.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/knowledge.hpp"
#include "sqlforge/llm.hpp"
#include "sqlforge/util.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::gen {

enum class GeneratorKind { traditional, vanilla, template_icl, radagas, reflexqli, seed_only };
std::string_view to_string(GeneratorKind kind);
std::optional<GeneratorKind> generator_from_string(std::string_view name);

struct Payload {
    std::string text;
    GeneratorKind generator = GeneratorKind::traditional;
    std::string run_id;
    std::size_t index = 0;
    std::string config_digest;
    std::optional<std::string> seed_parent;
    std::optional<std::string> cot_trace_path;
    std::optional<int> discriminator_score;
};

/// One JSON object per line with exactly the Payload fields; absent
/// optionals are written as null.
std::string to_jsonl(const Payload& payload);
Payload payload_from_jsonl(std::string_view line);
std::string write_jsonl(std::span<const Payload> payloads);
std::vector<Payload> read_jsonl(std::string_view text);

inline constexpr double kBaselineTemperature = 0.7;

struct GenerationParams {
    std::size_t n = 1000;
    double temperature = 0.7;
    double theta = 0.9;  // radagas only
    std::uint64_t rng_seed = 0;
    std::string run_id = "run_0";
    std::string config_digest;
};

struct ReflexParams {
    int i_max = 3;
    int tau = 7;  // accept when score < tau
    std::string waf_profile = "Signature-based WAF with OWASP CRS-style rules at paranoia level 1";
};

enum class Framing { raw, string_context };
std::string_view to_string(Framing f);

struct SeedList {
    std::vector<std::string> seeds;
    Framing framing = Framing::raw;
};

inline constexpr std::string_view kSeedPrefix = "' ";
inline constexpr std::string_view kSeedSuffix = " -- ";

std::string frame_seed(std::string_view seed, Framing framing);
std::vector<std::string> framed_seeds(const SeedList& seeds);
/// One seed per non-empty line; '#' starts a comment line.
SeedList load_seeds(const std::string& path, Framing framing);

/// Closest framed seed by normalized edit distance (first on ties).
std::string closest_seed(std::string_view payload, std::span<const std::string> framed);

struct GenerationStats {
    std::size_t calls = 0;
    std::size_t refusals = 0;
    std::size_t provider_errors = 0;
    std::size_t candidates = 0;
    std::size_t rejected_parse = 0;
    std::size_t rejected_exec = 0;
    std::size_t rejected_diversity = 0;
    std::size_t reflex_iterations = 0;
    std::size_t reflex_dropped = 0;
    std::size_t score_parse_errors = 0;
    std::size_t failed_slots = 0;
    bool stopped_on_refusals = false;
};

struct GenerationResult {
    std::vector<Payload> payloads;
    GenerationStats stats;
    std::size_t requested = 0;

    /// Fewer payloads than requested: the caller reports a partial result.
    bool partial() const noexcept { return payloads.size() < requested; }
    std::size_t shortfall() const noexcept { return requested > payloads.size() ? requested - payloads.size() : 0; }
};

/// Consecutive refusals after which a generator stops.
inline constexpr std::size_t kRefusalCap = 3;

// ---------------------------------------------------------------------------
// Catalog sampler

/// Template lines, skipping blanks and '#' comments. Throws CatalogError
/// when the file is missing or has no templates.
std::vector<std::string> load_catalog(const std::string& path);

inline constexpr std::array<std::string_view, 3> kFixtureTables = {"users", "products", "sessions"};
inline constexpr std::array<std::string_view, 5> kFixtureColumns = {"id", "name", "password", "email", "role"};

std::string fill_placeholders(std::string_view tmpl, Rng& rng);

GenerationResult generate_traditional(std::span<const std::string> catalog, const GenerationParams& params);

// ---------------------------------------------------------------------------
// LLM baselines. Both run at kBaselineTemperature with a budget of 3n calls
// and request up to 10 payloads per call.

inline constexpr std::size_t kBatchSize = 10;

GenerationResult generate_vanilla(const llm::ChatProvider& provider, const GenerationParams& params);

/// Throws SeedError for an empty seed list.
GenerationResult generate_template_icl(const llm::ChatProvider& provider, const SeedList& seeds,
                                       const GenerationParams& params);

// ---------------------------------------------------------------------------
// Retrieval-augmented generation

struct RadagasOptions {
    std::string query = "Generate SQL injection payloads that bypass web application firewalls.";
    knowledge::RetrievalParams retrieval;
    std::size_t recent_accepted = 20;
    std::size_t batch = kBatchSize;
    const SeedList* seeds = nullptr;        // seeded variant when set
    eval::SqlExecutor* executor = nullptr;  // live execution gate when set
};

struct AcceptanceEntry {
    std::size_t candidate = 0;
    std::string text;
    bool parse_ok = false;
    bool exec_ok = false;
    diversity::FilterResult filter;  // meaningful when parse_ok && exec_ok
    bool accepted = false;
};

/// Candidates are counted against a budget of 10n. Throws IndexError for an
/// empty index and InvalidParams unless 0 < theta < 1.
GenerationResult generate_radagas(const llm::ChatProvider& provider, const knowledge::VectorIndex& index,
                                  std::shared_ptr<const Embedder> embedder, const GenerationParams& params,
                                  const RadagasOptions& options, std::vector<AcceptanceEntry>* log = nullptr);

/// Re-runs the diversity gates over the logged candidates in order and
/// checks that every recorded decision and the final set are reproduced.
bool replay_acceptance_log(std::span<const AcceptanceEntry> log, double theta,
                           std::shared_ptr<const Embedder> embedder);

// ---------------------------------------------------------------------------
// Chain-of-thought generator with discriminator

inline constexpr std::string_view kRejectFeedback = "REJECT!: Detected patterns: refine payload";

/// First integer in [0, 10] in the text. Throws ScoreParseError otherwise.
int parse_score(std::string_view text);

int score_discriminator(const llm::ChatProvider& provider, std::string_view payload, std::string_view waf_profile,
                        std::uint64_t seed = 0);

struct ReflexOptions {
    const SeedList* seeds = nullptr;
    std::string cot_dir;  // phase transcripts are written here when non-empty
};

GenerationResult generate_reflexqli(const llm::ChatProvider& generator, const llm::ChatProvider& discriminator,
                                    const GenerationParams& params, const ReflexParams& reflex,
                                    const ReflexOptions& options = {});

// ---------------------------------------------------------------------------

/// Seeds as payloads, framed, in order. Throws SeedError when empty.
GenerationResult seed_only_payloads(const SeedList& seeds, const GenerationParams& params);

}  // namespace sqlforge::gen
