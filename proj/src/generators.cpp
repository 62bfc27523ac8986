#include "sqlforge/generators.hpp"

#include "sqlforge/error.hpp"
#include "sqlforge/sql.hpp"
#include "sqlforge/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <deque>
#include <filesystem>

namespace sqlforge::gen {

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::traditional: return "traditional";
        case GeneratorKind::vanilla: return "vanilla";
        case GeneratorKind::template_icl: return "template_icl";
        case GeneratorKind::radagas: return "radagas";
        case GeneratorKind::reflexqli: return "reflexqli";
        case GeneratorKind::seed_only: return "seed_only";
    }
    return "?";
}

std::optional<GeneratorKind> generator_from_string(std::string_view name) {
    for (auto k : {GeneratorKind::traditional, GeneratorKind::vanilla, GeneratorKind::template_icl,
                   GeneratorKind::radagas, GeneratorKind::reflexqli, GeneratorKind::seed_only}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view to_string(Framing f) { return f == Framing::raw ? "raw" : "string_context"; }

// ---------------------------------------------------------------------------
// JSON Lines

std::string to_jsonl(const Payload& p) {
    nlohmann::ordered_json j;
    j["text"] = p.text;
    j["generator"] = to_string(p.generator);
    j["run_id"] = p.run_id;
    j["index"] = p.index;
    j["config_digest"] = p.config_digest;
    j["seed_parent"] = p.seed_parent ? nlohmann::ordered_json(*p.seed_parent) : nlohmann::ordered_json(nullptr);
    j["cot_trace_path"] =
        p.cot_trace_path ? nlohmann::ordered_json(*p.cot_trace_path) : nlohmann::ordered_json(nullptr);
    j["discriminator_score"] =
        p.discriminator_score ? nlohmann::ordered_json(*p.discriminator_score) : nlohmann::ordered_json(nullptr);
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

Payload payload_from_jsonl(std::string_view line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::ParseError, "payload line is not a JSON object");
    try {
        Payload p;
        p.text = j.at("text").get<std::string>();
        auto kind = generator_from_string(j.at("generator").get<std::string>());
        if (!kind) throw Error(ErrorKind::ParseError, "unknown generator in payload line");
        p.generator = *kind;
        p.run_id = j.value("run_id", "");
        p.index = j.value("index", std::size_t{0});
        p.config_digest = j.value("config_digest", "");
        if (j.contains("seed_parent") && j["seed_parent"].is_string()) p.seed_parent = j["seed_parent"].get<std::string>();
        if (j.contains("cot_trace_path") && j["cot_trace_path"].is_string()) {
            p.cot_trace_path = j["cot_trace_path"].get<std::string>();
        }
        if (j.contains("discriminator_score") && j["discriminator_score"].is_number_integer()) {
            p.discriminator_score = j["discriminator_score"].get<int>();
        }
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("payload line: ") + e.what());
    }
}

std::string write_jsonl(std::span<const Payload> payloads) {
    std::string out;
    for (const auto& p : payloads) out += to_jsonl(p) + "\n";
    return out;
}

std::vector<Payload> read_jsonl(std::string_view text) {
    std::vector<Payload> out;
    for (const auto& line : split_lines(text)) {
        if (!trim(line).empty()) out.push_back(payload_from_jsonl(line));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Seeds

std::string frame_seed(std::string_view seed, Framing framing) {
    if (framing == Framing::raw) return std::string(seed);
    return std::string(kSeedPrefix) + std::string(seed) + std::string(kSeedSuffix);
}

std::vector<std::string> framed_seeds(const SeedList& seeds) {
    std::vector<std::string> out;
    for (const auto& s : seeds.seeds) out.push_back(frame_seed(s, seeds.framing));
    return out;
}

SeedList load_seeds(const std::string& path, Framing framing) {
    SeedList list;
    list.framing = framing;
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw Error(ErrorKind::SeedError, "cannot read seed file " + path);
    }
    for (const auto& line : split_lines(text)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        list.seeds.push_back(t);
    }
    if (list.seeds.empty()) throw Error(ErrorKind::SeedError, "seed file has no seeds: " + path);
    return list;
}

std::string closest_seed(std::string_view payload, std::span<const std::string> framed) {
    std::string best;
    double best_d = 2.0;
    for (const auto& s : framed) {
        const double d = diversity::normalized_levenshtein(payload, s);
        if (d < best_d) {
            best_d = d;
            best = s;
        }
    }
    return best;
}

namespace {

void require_seeds(const SeedList& seeds) {
    if (seeds.seeds.empty()) throw Error(ErrorKind::SeedError, "seed list is empty");
}

Payload make_payload(std::string text, GeneratorKind kind, const GenerationParams& params, std::size_t index) {
    Payload p;
    p.text = std::move(text);
    p.generator = kind;
    p.run_id = params.run_id;
    p.index = index;
    p.config_digest = params.config_digest;
    return p;
}

std::uint64_t call_seed(const GenerationParams& params, std::uint64_t stream, std::uint64_t counter) {
    return mix64(params.rng_seed ^ mix64(stream ^ mix64(counter)));
}

void check_n(const GenerationParams& params) {
    if (params.n == 0) throw Error(ErrorKind::InvalidParams, "payload count must be at least 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog sampler

std::vector<std::string> load_catalog(const std::string& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::CatalogError, "catalog not found: " + path);
    std::vector<std::string> out;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        out.push_back(line);
    }
    if (out.empty()) throw Error(ErrorKind::CatalogError, "catalog has no templates: " + path);
    return out;
}

std::string fill_placeholders(std::string_view tmpl, Rng& rng) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.substr(i, 5) == "{TBL}") {
            out += kFixtureTables[rng.below(kFixtureTables.size())];
            i += 5;
        } else if (tmpl.substr(i, 5) == "{COL}") {
            out += kFixtureColumns[rng.below(kFixtureColumns.size())];
            i += 5;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

GenerationResult generate_traditional(std::span<const std::string> catalog, const GenerationParams& params) {
    if (catalog.empty()) throw Error(ErrorKind::CatalogError, "catalog has no templates");
    check_n(params);
    GenerationResult r;
    r.requested = params.n;
    Rng rng(params.rng_seed);
    for (std::size_t i = 0; i < params.n; ++i) {
        const auto& tmpl = catalog[rng.below(catalog.size())];
        r.payloads.push_back(make_payload(fill_placeholders(tmpl, rng), GeneratorKind::traditional, params, i));
    }
    return r;
}

// ---------------------------------------------------------------------------
// LLM baselines

namespace {

GenerationResult run_baseline(const llm::ChatProvider& provider, const GenerationParams& params,
                              llm::TemplateId tmpl, GeneratorKind kind, const SeedList* seeds) {
    check_n(params);
    GenerationResult r;
    r.requested = params.n;
    const auto framed = seeds ? framed_seeds(*seeds) : std::vector<std::string>{};
    const std::size_t budget = 3 * params.n;
    std::size_t consecutive_refusals = 0;

    for (std::size_t call = 0; call < budget && r.payloads.size() < params.n; ++call) {
        const std::size_t want = std::min(kBatchSize, params.n - r.payloads.size());
        llm::Bindings b{{"count", std::to_string(want)}};
        if (seeds) b["examples"] = llm::bullet_list(framed);
        llm::ChatRequest req;
        req.provider_id = provider.id();
        req.prompt = llm::render_prompt(tmpl, b);
        req.temperature = kBaselineTemperature;
        req.seed = call_seed(params, static_cast<std::uint64_t>(kind), call);
        ++r.stats.calls;
        llm::ChatOutcome outcome;
        try {
            outcome = provider.complete(req);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ProviderError) throw;
            ++r.stats.provider_errors;
            continue;
        }
        if (std::holds_alternative<llm::Refusal>(outcome)) {
            ++r.stats.refusals;
            if (++consecutive_refusals >= kRefusalCap) {
                r.stats.stopped_on_refusals = true;
                break;
            }
            continue;
        }
        consecutive_refusals = 0;
        for (auto& text : llm::extract_payloads(std::get<llm::ChatResponse>(outcome).text)) {
            if (r.payloads.size() >= params.n) break;
            ++r.stats.candidates;
            Payload p = make_payload(std::move(text), kind, params, r.payloads.size());
            if (!framed.empty()) p.seed_parent = closest_seed(p.text, framed);
            r.payloads.push_back(std::move(p));
        }
    }
    return r;
}

}  // namespace

GenerationResult generate_vanilla(const llm::ChatProvider& provider, const GenerationParams& params) {
    return run_baseline(provider, params, llm::TemplateId::vanilla_zero_shot, GeneratorKind::vanilla, nullptr);
}

GenerationResult generate_template_icl(const llm::ChatProvider& provider, const SeedList& seeds,
                                       const GenerationParams& params) {
    require_seeds(seeds);
    return run_baseline(provider, params, llm::TemplateId::template_icl, GeneratorKind::template_icl, &seeds);
}

// ---------------------------------------------------------------------------
// Retrieval-augmented generation

GenerationResult generate_radagas(const llm::ChatProvider& provider, const knowledge::VectorIndex& index,
                                  std::shared_ptr<const Embedder> embedder, const GenerationParams& params,
                                  const RadagasOptions& options, std::vector<AcceptanceEntry>* log) {
    if (index.empty()) throw Error(ErrorKind::IndexError, "knowledge index is empty");
    if (!(params.theta > 0.0 && params.theta < 1.0)) throw Error(ErrorKind::InvalidParams, "theta must lie in (0, 1)");
    check_n(params);

    GenerationResult r;
    r.requested = params.n;

    knowledge::RetrievalParams rp = options.retrieval;
    rp.k = std::min(rp.k, index.size());
    const auto context = knowledge::mmr_retrieve(index, embedder->embed(options.query), rp);
    std::string context_text;
    for (const auto& c : context) {
        if (!context_text.empty()) context_text += "\n---\n";
        context_text += c.text;
    }
    const auto framed = options.seeds ? framed_seeds(*options.seeds) : std::vector<std::string>{};
    const std::string examples = framed.empty() ? "(none)" : llm::bullet_list(framed);

    diversity::FeatureStore store(embedder, diversity::payload_tree, false);
    std::vector<std::size_t> accepted_pos;
    std::vector<std::string> accepted_text;
    const std::size_t budget = 10 * params.n;
    const std::size_t batch = std::max<std::size_t>(1, options.batch);
    std::size_t consecutive_refusals = 0;
    std::size_t call = 0;

    while (r.payloads.size() < params.n && r.stats.candidates < budget) {
        const std::size_t recent_from =
            accepted_text.size() > options.recent_accepted ? accepted_text.size() - options.recent_accepted : 0;
        const std::vector<std::string> recent(accepted_text.begin() + static_cast<std::ptrdiff_t>(recent_from),
                                              accepted_text.end());
        llm::ChatRequest req;
        req.provider_id = provider.id();
        req.prompt = llm::render_prompt(llm::TemplateId::radagas,
                                        {{"query", options.query},
                                         {"context", context_text},
                                         {"examples", examples},
                                         {"accepted", recent.empty() ? "(none)" : llm::bullet_list(recent)},
                                         {"count", std::to_string(batch)}});
        req.temperature = params.temperature;
        req.seed = call_seed(params, 0x7261646167ULL, call++);
        ++r.stats.calls;

        llm::ChatOutcome outcome;
        try {
            outcome = provider.complete(req);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ProviderError) throw;
            ++r.stats.provider_errors;
            r.stats.candidates += batch;  // a failed call spends its share of the budget
            continue;
        }
        if (std::holds_alternative<llm::Refusal>(outcome)) {
            ++r.stats.refusals;
            r.stats.candidates += batch;
            if (++consecutive_refusals >= kRefusalCap) {
                r.stats.stopped_on_refusals = true;
                break;
            }
            continue;
        }
        consecutive_refusals = 0;
        auto candidates = llm::extract_payloads(std::get<llm::ChatResponse>(outcome).text);
        if (candidates.empty()) r.stats.candidates += batch;

        for (auto& text : candidates) {
            if (r.payloads.size() >= params.n || r.stats.candidates >= budget) break;
            AcceptanceEntry entry;
            entry.candidate = r.stats.candidates++;
            entry.text = text;
            entry.parse_ok = sql::parse_payload(text).ok();
            if (!entry.parse_ok) {
                ++r.stats.rejected_parse;
            } else {
                entry.exec_ok = true;
                if (options.executor) {
                    entry.exec_ok = options.executor->execute(text).status != eval::ExecStatus::sql_error;
                }
                if (!entry.exec_ok) {
                    ++r.stats.rejected_exec;
                } else {
                    const std::size_t pos = store.add(text);
                    entry.filter = diversity::passes_filter(store, pos, accepted_pos, params.theta);
                    entry.accepted = entry.filter.passed;
                    if (entry.accepted) {
                        accepted_pos.push_back(pos);
                        accepted_text.push_back(text);
                        Payload p = make_payload(text, GeneratorKind::radagas, params, r.payloads.size());
                        if (!framed.empty()) p.seed_parent = closest_seed(text, framed);
                        r.payloads.push_back(std::move(p));
                    } else {
                        ++r.stats.rejected_diversity;
                    }
                }
            }
            if (log) log->push_back(std::move(entry));
        }
    }
    return r;
}

bool replay_acceptance_log(std::span<const AcceptanceEntry> log, double theta,
                           std::shared_ptr<const Embedder> embedder) {
    diversity::FeatureStore store(std::move(embedder), diversity::payload_tree, false);
    std::vector<std::size_t> accepted;
    for (const auto& e : log) {
        if (!e.parse_ok || !e.exec_ok) {
            if (e.accepted) return false;
            continue;
        }
        const std::size_t pos = store.add(e.text);
        const auto f = diversity::passes_filter(store, pos, accepted, theta);
        if (f.passed != e.accepted) return false;
        if (f.passed) {
            // Every gate must hold against each previously accepted payload.
            if (!(f.semantic > theta && f.lexical > theta && f.contextual_f1 < theta)) return false;
            accepted.push_back(pos);
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Chain-of-thought generator

int parse_score(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            const std::string digits(text.substr(i, j - i));
            if (digits.size() <= 2) {
                const int v = std::stoi(digits);
                if (v >= 0 && v <= 10) return v;
            }
            i = j;
        } else {
            ++i;
        }
    }
    throw Error(ErrorKind::ScoreParseError, "no score in discriminator response");
}

int score_discriminator(const llm::ChatProvider& provider, std::string_view payload, std::string_view waf_profile,
                        std::uint64_t seed) {
    if (payload.empty()) throw Error(ErrorKind::InvalidParams, "empty payload");
    llm::ChatRequest req;
    req.provider_id = provider.id();
    req.prompt = llm::render_prompt(llm::TemplateId::discriminator_score,
                                    {{"waf_profile", std::string(waf_profile)}, {"payload", std::string(payload)}});
    req.temperature = 0.0;
    req.seed = seed;
    auto outcome = provider.complete(req);
    if (auto* refusal = std::get_if<llm::Refusal>(&outcome)) {
        throw Error(ErrorKind::ScoreParseError, "discriminator refused: " + refusal->message);
    }
    return parse_score(std::get<llm::ChatResponse>(outcome).text);
}

namespace {

struct RefusalSignal {};

}  // namespace

GenerationResult generate_reflexqli(const llm::ChatProvider& generator, const llm::ChatProvider& discriminator,
                                    const GenerationParams& params, const ReflexParams& reflex,
                                    const ReflexOptions& options) {
    check_n(params);
    if (reflex.i_max < 1) throw Error(ErrorKind::InvalidParams, "i_max must be at least 1");
    if (reflex.tau < 0 || reflex.tau > 10) throw Error(ErrorKind::InvalidParams, "tau must lie in [0, 10]");
    if (options.seeds) require_seeds(*options.seeds);

    GenerationResult r;
    r.requested = params.n;
    const auto framed = options.seeds ? framed_seeds(*options.seeds) : std::vector<std::string>{};
    const std::string examples = framed.empty() ? "(none)" : llm::bullet_list(framed);
    std::size_t consecutive_refusals = 0;
    std::uint64_t counter = 0;

    auto ask = [&](const std::string& prompt) -> std::string {
        llm::ChatRequest req;
        req.provider_id = generator.id();
        req.prompt = prompt;
        req.temperature = params.temperature;
        req.seed = call_seed(params, 0x7265666cULL, counter++);
        ++r.stats.calls;
        auto outcome = generator.complete(req);
        if (std::holds_alternative<llm::Refusal>(outcome)) {
            ++r.stats.refusals;
            throw RefusalSignal{};
        }
        consecutive_refusals = 0;
        return std::get<llm::ChatResponse>(outcome).text;
    };

    for (std::size_t slot = 0; slot < params.n; ++slot) {
        std::string transcript;
        std::optional<Payload> emitted;
        try {
            const std::string analysis = ask(llm::render_prompt(
                llm::TemplateId::reflex_analysis, {{"waf_profile", reflex.waf_profile}, {"examples", examples}}));
            const std::string strategy =
                ask(llm::render_prompt(llm::TemplateId::reflex_strategy, {{"analysis", analysis}}));
            const std::string design = ask(llm::render_prompt(llm::TemplateId::reflex_design, {{"strategy", strategy}}));
            const std::string refinement = ask(
                llm::render_prompt(llm::TemplateId::reflex_refine, {{"design", design}, {"examples", examples}}));
            transcript = "## analysis\n" + analysis + "\n\n## strategy\n" + strategy + "\n\n## design\n" + design +
                         "\n\n## refinement\n" + refinement + "\n";

            std::string context = refinement;
            for (int it = 1; it <= reflex.i_max; ++it) {
                ++r.stats.reflex_iterations;
                const auto found = llm::extract_payloads(ask(context));
                if (found.empty()) {
                    transcript += "\n## iteration " + std::to_string(it) + "\n(no payload)\n";
                    context += "\n" + std::string(kRejectFeedback) + " (no payload found)";
                    continue;
                }
                const std::string& candidate = found.front();
                int score = 10;
                bool scored = true;
                try {
                    score = score_discriminator(discriminator, candidate, reflex.waf_profile,
                                                call_seed(params, 0x64697363ULL, counter++));
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::ScoreParseError) throw;
                    ++r.stats.score_parse_errors;
                    scored = false;
                }
                transcript += "\n## iteration " + std::to_string(it) + "\n" + candidate + "\nscore: " +
                              (scored ? std::to_string(score) : std::string("unparseable")) + "\n";
                if (scored && score < reflex.tau) {
                    Payload p = make_payload(candidate, GeneratorKind::reflexqli, params, 0);
                    p.discriminator_score = score;
                    if (!framed.empty()) p.seed_parent = closest_seed(candidate, framed);
                    emitted = std::move(p);
                    break;
                }
                context += "\n" + std::string(kRejectFeedback) + " (score " +
                           (scored ? std::to_string(score) : std::string("unparseable")) + ")";
            }
            if (!emitted) ++r.stats.reflex_dropped;
        } catch (const RefusalSignal&) {
            ++r.stats.failed_slots;
            if (++consecutive_refusals >= kRefusalCap) {
                r.stats.stopped_on_refusals = true;
                break;
            }
            continue;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ProviderError) throw;
            ++r.stats.provider_errors;
            ++r.stats.failed_slots;
            continue;
        }

        std::optional<std::string> trace_path;
        if (!options.cot_dir.empty()) {
            const std::string path = options.cot_dir + "/slot_" + std::to_string(slot) + ".md";
            write_file(path, transcript);
            trace_path = path;
        }
        if (emitted) {
            emitted->index = r.payloads.size();
            emitted->cot_trace_path = trace_path;
            r.payloads.push_back(std::move(*emitted));
        }
    }
    return r;
}

GenerationResult seed_only_payloads(const SeedList& seeds, const GenerationParams& params) {
    require_seeds(seeds);
    GenerationResult r;
    r.requested = seeds.seeds.size();
    for (const auto& s : seeds.seeds) {
        Payload p = make_payload(frame_seed(s, seeds.framing), GeneratorKind::seed_only, params, r.payloads.size());
        p.seed_parent = s;
        r.payloads.push_back(std::move(p));
    }
    return r;
}

}  // namespace sqlforge::gen
