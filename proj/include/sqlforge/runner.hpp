#pragma once
// Experiment orchestration: versioned JSON configs, per-run artifacts,
// parameter grids, report tables and the seed ablation.

#include "sqlforge/diversity.hpp"
#include "sqlforge/embedding.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/generators.hpp"
#include "sqlforge/knowledge.hpp"
#include "sqlforge/llm.hpp"
#include "sqlforge/stats.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::runner {

inline constexpr int kSchemaVersion = 1;

struct DetectorSpec {
    std::string id;
    std::string kind;  // "rules", "ml" or "remote"
    std::string path;  // rules TSV or ML weights JSON; empty selects the shipped file
    int paranoia = 1;
    eval::RemoteWafConfig remote;
};

struct KnowledgeSpec {
    std::vector<std::string> files;  // empty selects the shipped knowledge base
    std::string index;               // prebuilt index file; overrides `files`
    std::size_t chunk_size = knowledge::kDefaultChunkSize;
    std::size_t chunk_overlap = knowledge::kDefaultChunkOverlap;
    knowledge::RetrievalParams retrieval;
    std::string query = "Generate SQL injection payloads that bypass web application firewalls.";
};

struct EmbedderSpec {
    std::string kind = "hashed";  // "hashed" or "http"
    HttpEmbedder::Config http;
};

struct SeedSpec {
    std::string path;
    gen::Framing framing = gen::Framing::string_context;
};

struct ExperimentConfig {
    std::string name;  // system label in reports; defaults to the generator name
    gen::GeneratorKind generator = gen::GeneratorKind::radagas;
    std::string provider = "mock";
    std::string discriminator_provider;  // defaults to `provider`
    std::string providers_file;
    std::size_t n = 1000;
    std::size_t runs = 5;
    double temperature = 0.7;
    double theta = 0.9;
    gen::ReflexParams reflex;
    std::optional<SeedSpec> seeds;
    std::string catalog;  // empty selects the shipped catalog
    KnowledgeSpec knowledge;
    EmbedderSpec embedder;
    std::vector<DetectorSpec> detectors;  // empty selects the built-in set
    std::optional<eval::DbConfig> database = eval::DbConfig{};
    bool execution_gate = true;  // live execution check inside RADAGAS
    std::uint64_t rng_seed = 0;
    std::uint64_t mock_seed = 0;
    bool mock = false;  // every provider and embedder replaced by offline stand-ins

    // Not part of the digest.
    std::string output_dir = "out";
    std::size_t workers = 0;
    std::string base_dir = ".";  // relative paths resolve against this
};

struct GridAxes {
    std::string model;
    std::vector<double> temperatures;
    std::vector<double> thetas;
    std::size_t pool = 2;
};

/// Throws ConfigError for malformed JSON, unknown keys, a wrong
/// schema_version or out-of-range values. A "grid" object is accepted and
/// returned separately when `grid` is non-null.
ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir = ".",
                              std::optional<GridAxes>* grid = nullptr);
ExperimentConfig load_config(const std::string& path, std::optional<GridAxes>* grid = nullptr);

/// Sorted-key JSON of every result-affecting field, defaults filled in.
std::string canonical_config(const ExperimentConfig& config);
/// 16 hex digits of FNV-1a over canonical_config.
std::string config_digest(const ExperimentConfig& config);

/// Shipped data file, e.g. data_path("rules/crs_subset.tsv").
std::string data_path(std::string_view relative);
std::string resolve_path(const ExperimentConfig& config, const std::string& path);

std::vector<DetectorSpec> builtin_detectors();

struct RunOptions {
    bool resume = true;  // skip configs whose summary is already complete
    std::function<void(const std::string&)> log;
};

/// Everything a config needs at run time.
struct Resources {
    llm::ProviderRegistry registry;
    std::shared_ptr<const Embedder> embedder;
    std::vector<std::shared_ptr<const eval::Detector>> detectors;
    std::unique_ptr<eval::SqlExecutor> executor;
    std::optional<knowledge::VectorIndex> index;
    std::vector<std::string> catalog;
    std::optional<gen::SeedList> seeds;
};

Resources prepare(const ExperimentConfig& config, const RunOptions& options);

/// One generation with the config's generator; `cot_dir` receives chain of
/// thought transcripts for the reflexqli generator.
gen::GenerationResult generate(const ExperimentConfig& config, Resources& resources,
                               const gen::GenerationParams& params, const std::string& cot_dir = "");

struct DetectorRate {
    std::string detector_id;
    std::optional<double> rate_pct;  // absent when every verdict was an error
};

struct RunResult {
    std::size_t run_index = 0;
    std::size_t requested = 0;
    std::size_t produced = 0;
    gen::GenerationStats stats;
    std::vector<DetectorRate> rates;
    std::optional<double> overall_pct;
    std::optional<diversity::DiversityReport> diversity;
};

struct ExperimentSummary {
    std::string name;
    std::string config_digest;
    std::string generator;
    double temperature = 0.0;
    double theta = 0.0;
    std::vector<std::string> detector_ids;
    std::vector<RunResult> runs;
    std::optional<double> mean_pct;
    std::optional<double> sigma_pct;
    std::vector<DetectorRate> mean_rates;  // per detector, averaged over runs
    std::optional<diversity::DiversityReport> mean_diversity;
    bool partial = false;
    bool complete = false;
    std::string error;
};

std::string summary_to_json(const ExperimentSummary& summary);
ExperimentSummary summary_from_json(std::string_view text);
ExperimentSummary load_summary(const std::string& path);

/// Evaluates payloads against detectors and the executor and derives
/// per-detector rates, the overall mean and the diversity report.
struct Evaluated {
    std::vector<eval::EvaluationRecord> records;
    std::vector<DetectorRate> rates;
    std::optional<double> overall_pct;
    std::optional<diversity::SetScore> diversity;
};
Evaluated evaluate_payloads(std::span<const std::string> payloads, Resources& resources, std::size_t workers,
                            bool with_diversity);

/// Writes <output_dir>/<digest>/run_k/... and summary.json. Infrastructure
/// errors abort the experiment; the summary is still written with
/// complete=false and the message.
ExperimentSummary run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct GridRow {
    std::string model;
    double theta = 0.0;
    double temperature = 0.0;
    std::optional<double> mean_pct;
    std::optional<double> sigma_pct;
    std::string config_digest;
    std::string error;
};

/// Mean descending, then theta ascending, then temperature ascending; rows
/// without a mean go last.
void sort_grid_rows(std::vector<GridRow>& rows);
std::string grid_csv(std::span<const GridRow> rows);

struct GridResult {
    std::vector<GridRow> rows;  // sorted
    std::vector<ExperimentSummary> summaries;  // grid order: theta-major, then temperature
};

GridResult run_grid(const ExperimentConfig& base, const GridAxes& axes, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Tables and reports

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv_table(std::string_view text);
std::string to_csv(const CsvTable& table);
/// Aligned plain-text rendering.
std::string to_text(const CsvTable& table, std::string_view title = "");

/// Correlates every metric column with the `bypass` column. The first
/// column names the system. When the six diversity metric columns are
/// present without a `total` column, their row mean is added as `total`.
std::vector<stats::CorrelationRow> correlation_table(const CsvTable& table);
CsvTable correlation_csv(std::span<const stats::CorrelationRow> rows);

struct WafMatrix {
    CsvTable table;  // system, detectors..., overall_mean
    std::vector<std::string> warnings;
};

/// Detector columns in first-seen order; columns with no data for any
/// system are dropped with a warning. overall_mean is the unweighted mean
/// of the row's detector cells.
WafMatrix waf_matrix(std::span<const ExperimentSummary> summaries);
CsvTable diversity_table(std::span<const ExperimentSummary> summaries);

/// Reads every *.csv in `reference_dir` into titled tables.
std::vector<std::pair<std::string, CsvTable>> load_reference_tables(const std::string& reference_dir);

enum class ReportFormat { csv, text };

/// Writes waf_matrix, diversity and correlations (when at least three
/// systems have diversity data) plus the reference fixtures. Returns the
/// paths written and collects warnings.
std::vector<std::string> emit_report(std::span<const ExperimentSummary> summaries, const std::string& out_dir,
                                     ReportFormat format, const std::string& reference_dir,
                                     std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Seed ablation

struct AblationSystem {
    std::string name;
    double mean_pct = 0.0;
    std::optional<double> sigma_pct;
    std::optional<double> exec_pct;
    double delta_vs_seed = 0.0;
    std::vector<DetectorRate> rates;
};

struct AblationResult {
    std::vector<DetectorRate> seed_rates;
    double seed_mean_pct = 0.0;
    std::optional<double> seed_exec_pct;
    std::vector<AblationSystem> systems;

    /// system, mean, sigma, exec, delta_vs_seed; seed-only row first.
    CsvTable summary_table() const;
    /// target rows plus a mean row; one column per system and, with two
    /// systems, a delta column (second minus first).
    CsvTable per_target_table() const;
};

/// Evaluates the framed seeds directly with the detectors and database of
/// `evaluation_config`, then runs every system config with `seeds` set.
AblationResult run_seed_ablation(const SeedSpec& seeds, const ExperimentConfig& evaluation_config,
                                 std::span<const ExperimentConfig> systems, const RunOptions& options = {});

}  // namespace sqlforge::runner
