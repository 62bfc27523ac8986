// sqlforge command line: knowledge-base build, generation, evaluation,
// diversity scoring, statistics, reports, grids and the seed ablation.

#include "sqlforge/error.hpp"
#include "sqlforge/runner.hpp"
#include "sqlforge/util.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace sqlforge;

namespace {

enum Exit { kOk = 0, kPartial = 1, kConfig = 2, kInfra = 3 };

struct Globals {
    std::string config;
    std::string out;
    bool mock = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> mock_seed;
    std::string provider;
    std::size_t workers = 0;
    bool quiet = false;
};

void log_line(const Globals& g, const std::string& msg) {
    if (!g.quiet) std::cerr << "sqlforge: " << msg << "\n";
}

runner::ExperimentConfig load(const Globals& g, std::optional<runner::GridAxes>* grid = nullptr) {
    runner::ExperimentConfig c;
    if (!g.config.empty()) c = runner::load_config(g.config, grid);
    if (!g.out.empty()) c.output_dir = g.out;
    if (g.mock) c.mock = true;
    if (g.seed) c.rng_seed = *g.seed;
    if (g.mock_seed) c.mock_seed = *g.mock_seed;
    if (!g.provider.empty()) c.provider = g.provider;
    if (g.workers) c.workers = g.workers;
    return c;
}

runner::RunOptions run_options(const Globals& g) {
    runner::RunOptions o;
    o.log = [&g](const std::string& m) { log_line(g, m); };
    return o;
}

std::vector<std::string> payload_texts(const std::string& path) {
    std::vector<std::string> out;
    for (const auto& p : gen::read_jsonl(read_file(path))) out.push_back(p.text);
    return out;
}

int report_summary(const runner::ExperimentSummary& s) {
    std::cout << s.name << " [" << s.config_digest << "]";
    if (s.mean_pct) std::cout << " mean " << fixed(*s.mean_pct, 2) << "%";
    if (s.sigma_pct) std::cout << " sigma " << fixed(*s.sigma_pct, 2);
    std::cout << (s.partial ? " (partial)" : "") << "\n";
    if (!s.error.empty()) {
        std::cerr << "sqlforge: " << s.error << "\n";
        return kInfra;
    }
    return s.partial ? kPartial : kOk;
}

int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::ConfigError:
        case ErrorKind::InvalidParams:
        case ErrorKind::TemplateError:
        case ErrorKind::CatalogError:
        case ErrorKind::SeedError:
        case ErrorKind::IndexError:
        case ErrorKind::DimensionError:
        case ErrorKind::ParseError:
        case ErrorKind::EmptyInput:
        case ErrorKind::NoData:
        case ErrorKind::DegenerateInput: return kConfig;
        default: return kInfra;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SQL injection payload generation and WAF evaluation toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)");
    app.add_option("--out", g.out, "Output directory");
    app.add_flag("--mock", g.mock, "Replace every provider and embedder with offline stand-ins");
    app.add_option("--seed", g.seed, "Base RNG seed; run k uses seed + k");
    app.add_option("--mock-seed", g.mock_seed, "Seed of the mock providers");
    app.add_option("--provider", g.provider, "Generator provider id");
    app.add_option("--workers", g.workers, "Worker threads (0 = automatic)");
    app.add_flag("-q,--quiet", g.quiet, "No progress output");

    // kb build
    auto* kb = app.add_subcommand("kb", "Knowledge base");
    kb->require_subcommand(1);
    auto* kb_build = kb->add_subcommand("build", "Chunk, embed and index documents");
    std::vector<std::string> kb_files;
    std::string kb_index = "kb.index";
    std::size_t kb_chunk = knowledge::kDefaultChunkSize;
    std::size_t kb_overlap = knowledge::kDefaultChunkOverlap;
    kb_build->add_option("files", kb_files, "Documents (default: the shipped notes)");
    kb_build->add_option("-o,--index", kb_index, "Index file to write");
    kb_build->add_option("--chunk-size", kb_chunk, "Characters per chunk");
    kb_build->add_option("--overlap", kb_overlap, "Characters shared by consecutive chunks");

    auto* run = app.add_subcommand("run", "Generate, evaluate and score every run of a config");
    auto* generate = app.add_subcommand("generate", "Generate payloads for every run of a config");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a payload file against the configured detectors");
    std::string eval_payloads;
    evaluate->add_option("payloads", eval_payloads, "payloads.jsonl")->required()->check(CLI::ExistingFile);

    auto* divers = app.add_subcommand("diversity", "Score the diversity of a payload file");
    std::string div_payloads;
    divers->add_option("payloads", div_payloads, "payloads.jsonl")->required()->check(CLI::ExistingFile);

    auto* st = app.add_subcommand("stats", "Correlate metric columns with the bypass column of a CSV table");
    std::string stats_input;
    std::string stats_format = "csv";
    std::string ci_column;
    std::size_t ci_resamples = 10000;
    double ci_alpha = 0.05;
    st->add_option("table", stats_input, "CSV: system, bypass, metric columns")->required()->check(CLI::ExistingFile);
    st->add_option("--format", stats_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
    st->add_option("--ci", ci_column, "Also print a bootstrap interval of this column's mean");
    st->add_option("--resamples", ci_resamples, "Bootstrap resamples");
    st->add_option("--alpha", ci_alpha, "Bootstrap significance level");

    auto* rep = app.add_subcommand("report", "Render tables from experiment summaries");
    std::vector<std::string> rep_inputs;
    std::string rep_format = "text";
    std::string rep_reference = runner::data_path("reference");
    rep->add_option("summaries", rep_inputs, "summary.json files or experiment directories")->required();
    rep->add_option("--format", rep_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
    rep->add_option("--reference-dir", rep_reference, "Published tables rendered alongside (empty to skip)");

    auto* grid = app.add_subcommand("grid", "Run the temperature x theta grid of a config");
    bool no_resume = false;
    grid->add_flag("--no-resume", no_resume, "Re-run configs that already have a complete summary");

    auto* abl = app.add_subcommand("seed-ablation", "Compare seeded generators against the seeds alone");
    std::string abl_seeds = runner::data_path("seeds/v2_seeds.txt");
    std::string abl_framing = "string_context";
    std::vector<std::string> abl_systems;
    abl->add_option("--seeds", abl_seeds, "Seed file")->check(CLI::ExistingFile);
    abl->add_option("--framing", abl_framing, "raw or string_context")->check(CLI::IsMember({"raw", "string_context"}));
    abl->add_option("--system", abl_systems, "System config (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (kb_build->parsed()) {
            auto files = kb_files;
            if (files.empty()) {
                for (const auto& e : fs::directory_iterator(runner::data_path("kb")))
                    if (e.is_regular_file()) files.push_back(e.path().string());
                std::sort(files.begin(), files.end());
            }
            auto chunks = knowledge::chunk_files(files, kb_chunk, kb_overlap);
            HashedTrigramEmbedder embedder;
            auto index = knowledge::build_index(chunks, embedder);
            index.save(kb_index);
            std::cout << chunks.size() << " chunks from " << files.size() << " files -> " << kb_index << "\n";
            return kOk;
        }

        if (run->parsed()) return report_summary(runner::run_experiment(load(g), run_options(g)));

        if (generate->parsed()) {
            auto c = load(g);
            auto res = runner::prepare(c, run_options(g));
            const std::string digest = runner::config_digest(c);
            int code = kOk;
            for (std::size_t k = 0; k < c.runs; ++k) {
                const fs::path dir = fs::path(c.output_dir) / digest / ("run_" + std::to_string(k));
                fs::create_directories(dir);
                gen::GenerationParams p;
                p.n = c.n;
                p.temperature = c.temperature;
                p.theta = c.theta;
                p.rng_seed = c.rng_seed + k;
                p.run_id = "run_" + std::to_string(k);
                p.config_digest = digest;
                std::string cot;
                if (c.generator == gen::GeneratorKind::reflexqli) {
                    cot = (dir / "cot").string();
                    fs::create_directories(cot);
                }
                auto r = runner::generate(c, res, p, cot);
                write_file((dir / "payloads.jsonl").string(), gen::write_jsonl(r.payloads));
                std::cout << (dir / "payloads.jsonl").string() << ": " << r.payloads.size() << "/" << r.requested
                          << "\n";
                if (r.partial()) code = kPartial;
            }
            return code;
        }

        if (evaluate->parsed()) {
            auto c = load(g);
            c.generator = gen::GeneratorKind::traditional;
            c.catalog = c.catalog.empty() ? runner::data_path("catalog/traditional.txt") : c.catalog;
            auto res = runner::prepare(c, run_options(g));
            const auto texts = payload_texts(eval_payloads);
            auto ev = runner::evaluate_payloads(texts, res, c.workers, false);
            const fs::path out = g.out.empty() ? fs::path(".") : fs::path(g.out);
            fs::create_directories(out);
            std::string csv = eval::records_csv_header();
            for (const auto& r : ev.records) csv += eval::record_csv_line(r);
            write_file((out / "evaluation.csv").string(), csv);
            runner::CsvTable t;
            t.header = {"detector", "bypass_pct"};
            for (const auto& r : ev.rates) t.rows.push_back({r.detector_id, r.rate_pct ? fixed(*r.rate_pct, 2) : ""});
            t.rows.push_back({"overall_mean", ev.overall_pct ? fixed(*ev.overall_pct, 2) : ""});
            write_file((out / "bypass.csv").string(), runner::to_csv(t));
            std::cout << runner::to_text(t);
            return kOk;
        }

        if (divers->parsed()) {
            auto c = load(g);
            c.generator = gen::GeneratorKind::traditional;
            c.catalog = c.catalog.empty() ? runner::data_path("catalog/traditional.txt") : c.catalog;
            c.detectors = {};
            auto res = runner::prepare(c, run_options(g));
            res.detectors.clear();
            const auto texts = payload_texts(div_payloads);
            if (texts.empty()) throw Error(ErrorKind::EmptyInput, "payload file is empty");
            auto ev = runner::evaluate_payloads(texts, res, c.workers, true);
            const fs::path out = g.out.empty() ? fs::path(".") : fs::path(g.out);
            fs::create_directories(out);
            const std::string line = diversity::report_csv_line(ev.diversity->report);
            write_file((out / "diversity.csv").string(), diversity::report_csv_header() + "\n" + line + "\n");
            std::string detail = diversity::detail_csv_header() + "\n";
            for (const auto& row : ev.diversity->detail) detail += diversity::detail_csv_line(row) + "\n";
            write_file((out / "diversity_detail.csv").string(), detail);
            std::cout << diversity::report_csv_header() << "\n" << line << "\n";
            return kOk;
        }

        if (st->parsed()) {
            const auto table = runner::parse_csv_table(read_file(stats_input));
            const auto rows = runner::correlation_table(table);
            const auto out = runner::correlation_csv(rows);
            const std::string body = stats_format == "csv" ? runner::to_csv(out) : runner::to_text(out);
            if (!g.out.empty()) {
                write_file(g.out, body);
            } else {
                std::cout << body;
            }
            if (!ci_column.empty()) {
                auto col = table.column(ci_column);
                if (!col) throw Error(ErrorKind::InvalidParams, "no column " + ci_column);
                std::vector<double> v;
                for (const auto& r : table.rows) v.push_back(std::stod(r[*col]));
                auto ci = stats::bootstrap_ci(v, ci_resamples, ci_alpha, g.seed.value_or(0));
                std::cout << ci_column << " mean " << (1.0 - ci_alpha) * 100.0 << "% interval: [" << fixed(ci.lo, 4)
                          << ", " << fixed(ci.hi, 4) << "]\n";
            }
            return kOk;
        }

        if (rep->parsed()) {
            std::vector<runner::ExperimentSummary> summaries;
            for (const auto& p : rep_inputs) summaries.push_back(runner::load_summary(p));
            std::vector<std::string> warnings;
            const std::string out = g.out.empty() ? "report" : g.out;
            auto files = runner::emit_report(summaries, out,
                                             rep_format == "csv" ? runner::ReportFormat::csv : runner::ReportFormat::text,
                                             rep_reference, &warnings);
            for (const auto& w : warnings) log_line(g, "warning: " + w);
            for (const auto& f : files) std::cout << f << "\n";
            return kOk;
        }

        if (grid->parsed()) {
            std::optional<runner::GridAxes> axes;
            auto c = load(g, &axes);
            if (!axes) throw Error(ErrorKind::ConfigError, "config has no grid section");
            auto opts = run_options(g);
            opts.resume = !no_resume;
            auto result = runner::run_grid(c, *axes, opts);
            std::cout << runner::grid_csv(result.rows);
            int code = kOk;
            for (const auto& s : result.summaries) {
                if (!s.error.empty()) code = std::max(code, static_cast<int>(kInfra));
                else if (s.partial) code = std::max(code, static_cast<int>(kPartial));
            }
            if (!result.rows.empty() && result.rows.front().mean_pct)
                std::cout << "best: theta " << fixed(result.rows.front().theta, 2) << " temperature "
                          << fixed(result.rows.front().temperature, 2) << " ["
                          << result.rows.front().config_digest << "]\n";
            return code;
        }

        if (abl->parsed()) {
            auto eval_config = load(g);
            runner::SeedSpec seeds{abl_seeds,
                                   abl_framing == "raw" ? gen::Framing::raw : gen::Framing::string_context};
            std::vector<runner::ExperimentConfig> systems;
            for (const auto& p : abl_systems) {
                auto s = runner::load_config(p);
                if (!g.out.empty()) s.output_dir = g.out;
                if (g.mock) s.mock = true;
                if (g.seed) s.rng_seed = *g.seed;
                if (g.mock_seed) s.mock_seed = *g.mock_seed;
                systems.push_back(std::move(s));
            }
            auto result = runner::run_seed_ablation(seeds, eval_config, systems, run_options(g));
            const fs::path out = g.out.empty() ? fs::path("out") : fs::path(g.out);
            fs::create_directories(out);
            write_file((out / "ablation_summary.csv").string(), runner::to_csv(result.summary_table()));
            write_file((out / "ablation_targets.csv").string(), runner::to_csv(result.per_target_table()));
            std::cout << runner::to_text(result.summary_table(), "Seed effect") << "\n"
                      << runner::to_text(result.per_target_table(), "Per-target bypass rates (%)");
            return kOk;
        }
    } catch (const Error& e) {
        std::cerr << "sqlforge: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "sqlforge: " << e.what() << "\n";
        return kInfra;
    }
    return kOk;
}
