#include "sqlforge/diversity.hpp"

#include "sqlforge/error.hpp"
#include "sqlforge/sql.hpp"
#include "sqlforge/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace sqlforge::diversity {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(utf8_decode(a), utf8_decode(b));
}

namespace {

double normalized_lev(std::u32string_view a, std::u32string_view b) {
    const std::size_t m = std::max(a.size(), b.size());
    if (m == 0) return 0.0;
    return static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
}

GramSet grams_of(std::u32string_view s) {
    GramSet out;
    for (std::size_t n = 2; n <= 4; ++n) {
        for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.substr(i, n));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool is_word_char(char32_t c) {
    if (c >= 0x80) return true;
    return std::isalnum(static_cast<int>(c)) || c == '_' || c == '@' || c == '$';
}

bool is_operator_char(char32_t c) {
    return c < 0x80 && std::string_view("=<>!|&+-*/%^~:#").find(static_cast<char>(c)) != std::string_view::npos;
}

std::vector<std::size_t> token_ids_sorted(const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> out = ids;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

TokenMatch greedy_match(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                        const std::function<float(std::size_t, std::size_t)>& sim) {
    TokenMatch m;
    if (a.empty() && b.empty()) return {1.0, 1.0, 1.0};
    if (a.empty() || b.empty()) return m;
    const auto ua = token_ids_sorted(a);
    const auto ub = token_ids_sorted(b);
    double p = 0.0;
    for (std::size_t x : a) {
        double best = -1.0;
        for (std::size_t y : ub) best = std::max(best, static_cast<double>(sim(x, y)));
        p += best;
    }
    double r = 0.0;
    for (std::size_t y : b) {
        double best = -1.0;
        for (std::size_t x : ua) best = std::max(best, static_cast<double>(sim(x, y)));
        r += best;
    }
    m.precision = p / static_cast<double>(a.size());
    m.recall = r / static_cast<double>(b.size());
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.f1 = std::clamp(m.f1, 0.0, 1.0);
    return m;
}

std::shared_ptr<const Embedder> borrow(const Embedder& e) {
    return std::shared_ptr<const Embedder>(&e, [](const Embedder*) {});
}

}  // namespace

double normalized_levenshtein(std::string_view a, std::string_view b) {
    return normalized_lev(utf8_decode(a), utf8_decode(b));
}

GramSet char_ngrams(std::string_view text) { return grams_of(utf8_decode(text)); }

double jaccard_distance(const GramSet& a, const GramSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::string> context_tokens(std::string_view text) {
    static const std::vector<std::u32string> kMulti = {U"<=>", U"--", U"/*", U"*/", U"<=", U">=", U"<>", U"!=",
                                                      U"||", U"&&", U"<<", U">>", U":=", U"=="};
    const std::u32string s = utf8_decode(text);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char32_t c = s[i];
        if (is_word_char(c)) {
            std::size_t j = i;
            while (j < s.size() && is_word_char(s[j])) ++j;
            out.push_back(to_lower(utf8_encode(s.substr(i, j - i))));
            i = j;
        } else if (c == '\'' || c == '"') {
            out.push_back(std::string(1, static_cast<char>(c)));
            ++i;
        } else if (is_operator_char(c)) {
            std::size_t len = 1;
            for (const auto& op : kMulti) {
                if (s.compare(i, op.size(), op) == 0) {
                    len = op.size();
                    break;
                }
            }
            out.push_back(utf8_encode(s.substr(i, len)));
            i += len;
        } else {
            ++i;  // whitespace and separators
        }
    }
    return out;
}

TokenMatch token_match(std::string_view a, std::string_view b, const Embedder& embedder) {
    FeatureStore store(borrow(embedder), payload_tree, false);
    store.add(a);
    store.add(b);
    return store.contextual(0, 1);
}

Tree payload_tree(std::string_view payload) {
    auto parsed = sql::parse_payload(payload);
    if (parsed.ok()) return std::move(*parsed.tree);
    return sql::token_tree(payload);
}

double semantic_diversity(std::string_view p_new, std::span<const std::string> accepted, const Embedder& embedder) {
    if (accepted.empty()) return 1.0;
    const Vector v = embedder.embed(p_new);
    double best = 1.0;
    for (const auto& p : accepted) best = std::min(best, std::clamp(1.0 - cosine(v, embedder.embed(p)), 0.0, 1.0));
    return best;
}

double lexical_diversity(std::string_view p_new, std::span<const std::string> accepted) {
    const auto a = utf8_decode(p_new);
    double best = 1.0;
    for (const auto& p : accepted) best = std::min(best, normalized_lev(a, utf8_decode(p)));
    return best;
}

double ngram_diversity(std::string_view p_new, std::span<const std::string> accepted) {
    const auto g = char_ngrams(p_new);
    double best = 1.0;
    for (const auto& p : accepted) best = std::min(best, jaccard_distance(g, char_ngrams(p)));
    return best;
}

ContextualResult contextual_similarity(std::string_view p_new, std::span<const std::string> accepted,
                                       const Embedder& embedder) {
    ContextualResult r;
    if (accepted.empty()) return r;
    FeatureStore store(borrow(embedder), payload_tree, false);
    const std::size_t c = store.add(p_new);
    for (const auto& p : accepted) {
        const std::size_t j = store.add(p);
        r.max_f1 = std::max(r.max_f1, store.contextual(c, j).f1);
    }
    r.diversity = 1.0 - r.max_f1;
    return r;
}

double ast_diversity(std::string_view p_new, std::span<const std::string> accepted, const TreeBuilder& builder) {
    if (accepted.empty()) return 1.0;
    const PreparedTree a(builder(p_new));
    double best = 1.0;
    for (const auto& p : accepted) {
        const PreparedTree b(builder(p));
        const double d = static_cast<double>(tree_edit_distance(a, b)) /
                         static_cast<double>(std::max(a.size(), b.size()));
        best = std::min(best, d);
    }
    return best;
}

double functional_diversity(std::span<const eval::FunctionalSignature> signatures) {
    if (signatures.empty()) throw Error(ErrorKind::EmptyInput, "no functional signatures");
    std::set<eval::FunctionalSignature> distinct(signatures.begin(), signatures.end());
    return static_cast<double>(distinct.size()) / static_cast<double>(signatures.size());
}

DiversityReport aggregate(double uniqueness_pct, const MetricMeans& m) {
    DiversityReport r;
    r.uniqueness_pct = uniqueness_pct;
    r.semantic = m.semantic;
    r.lexical = m.lexical;
    r.contextual = m.contextual;
    r.ngram = m.ngram;
    r.ast = m.ast;
    r.functional = m.functional;
    r.total = (m.semantic + m.lexical + m.contextual + m.ngram + m.ast + m.functional) / 6.0;
    return r;
}

double uniqueness_pct(std::span<const std::string> payloads) {
    if (payloads.empty()) throw Error(ErrorKind::EmptyInput, "no payloads");
    std::set<std::string_view> distinct(payloads.begin(), payloads.end());
    return 100.0 * static_cast<double>(distinct.size()) / static_cast<double>(payloads.size());
}

// ---------------------------------------------------------------------------

FeatureStore::FeatureStore(std::shared_ptr<const Embedder> embedder, TreeBuilder builder, bool with_trees)
    : embedder_(std::move(embedder)), builder_(std::move(builder)), with_trees_(with_trees) {}

std::size_t FeatureStore::token_id(const std::string& token) {
    auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) return it->second;
    const std::size_t id = token_vectors_.size();
    vocabulary_.emplace(token, id);
    token_vectors_.push_back(embedder_->embed(token));
    std::vector<float> row(id + 1);
    for (std::size_t k = 0; k < id; ++k) row[k] = static_cast<float>(cosine(token_vectors_[id], token_vectors_[k]));
    row[id] = 1.0f;
    token_cos_.push_back(std::move(row));
    return id;
}

float FeatureStore::token_cosine(std::size_t a, std::size_t b) const {
    return a >= b ? token_cos_[a][b] : token_cos_[b][a];
}

std::size_t FeatureStore::add(std::string_view text) {
    Item item;
    item.text = std::string(text);
    item.chars = utf8_decode(text);
    item.grams = grams_of(item.chars);
    item.embedding = embedder_->embed(text);
    for (const auto& t : context_tokens(text)) item.tokens.push_back(token_id(t));
    if (with_trees_) item.tree = std::make_unique<PreparedTree>(builder_(text));
    items_.push_back(std::move(item));
    return items_.size() - 1;
}

double FeatureStore::semantic(std::size_t i, std::size_t j) const {
    return std::clamp(1.0 - cosine(items_[i].embedding, items_[j].embedding), 0.0, 1.0);
}

double FeatureStore::lexical(std::size_t i, std::size_t j) const {
    return normalized_lev(items_[i].chars, items_[j].chars);
}

double FeatureStore::ngram(std::size_t i, std::size_t j) const {
    return jaccard_distance(items_[i].grams, items_[j].grams);
}

TokenMatch FeatureStore::contextual(std::size_t i, std::size_t j) const {
    return greedy_match(items_[i].tokens, items_[j].tokens,
                        [this](std::size_t a, std::size_t b) { return token_cosine(a, b); });
}

double FeatureStore::ast(std::size_t i, std::size_t j) const {
    if (!with_trees_) throw Error(ErrorKind::InvalidParams, "feature store built without trees");
    const auto& a = *items_[i].tree;
    const auto& b = *items_[j].tree;
    return static_cast<double>(tree_edit_distance(a, b)) / static_cast<double>(std::max(a.size(), b.size()));
}

double FeatureStore::lexical_lower_bound(std::size_t i, std::size_t j) const {
    const auto a = items_[i].chars.size();
    const auto b = items_[j].chars.size();
    const auto m = std::max(a, b);
    return m == 0 ? 0.0 : static_cast<double>(a > b ? a - b : b - a) / static_cast<double>(m);
}

double FeatureStore::ast_lower_bound(std::size_t i, std::size_t j) const {
    const auto a = items_[i].tree->size();
    const auto b = items_[j].tree->size();
    return static_cast<double>(a > b ? a - b : b - a) / static_cast<double>(std::max(a, b));
}

// ---------------------------------------------------------------------------

namespace {

void check_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::InvalidParams, "theta must lie in (0, 1)");
}

}  // namespace

FilterResult passes_filter(const FeatureStore& store, std::size_t candidate, std::span<const std::size_t> accepted,
                           double theta) {
    check_theta(theta);
    FilterResult r;
    for (std::size_t j : accepted) {
        r.semantic = std::min(r.semantic, store.semantic(candidate, j));
        r.lexical = std::min(r.lexical, store.lexical(candidate, j));
        r.contextual_f1 = std::max(r.contextual_f1, store.contextual(candidate, j).f1);
    }
    r.passed = r.semantic > theta && r.lexical > theta && r.contextual_f1 < theta;
    return r;
}

FilterResult passes_filter(std::string_view p_new, std::span<const std::string> accepted, double theta,
                           const Embedder& embedder) {
    check_theta(theta);
    FeatureStore store(borrow(embedder), payload_tree, false);
    std::vector<std::size_t> positions;
    for (const auto& p : accepted) positions.push_back(store.add(p));
    const std::size_t c = store.add(p_new);
    return passes_filter(store, c, positions, theta);
}

SetScore score_set(std::span<const std::string> payloads, std::span<const eval::FunctionalSignature> signatures,
                   std::shared_ptr<const Embedder> embedder, const TreeBuilder& builder, std::size_t workers) {
    if (payloads.empty()) throw Error(ErrorKind::EmptyInput, "no payloads to score");
    if (signatures.size() != payloads.size()) {
        throw Error(ErrorKind::InvalidParams, "need one functional signature per payload");
    }
    FeatureStore store(std::move(embedder), builder, true);
    for (const auto& p : payloads) store.add(p);

    const std::size_t n = payloads.size();
    SetScore out;
    out.detail.resize(n);

    // First occurrence of each text; later duplicates are zero-distance.
    std::map<std::string_view, std::size_t> first_seen;
    std::vector<bool> duplicate(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        duplicate[i] = !first_seen.emplace(payloads[i], i).second;
    }

    auto score_one = [&](std::size_t i) {
        PayloadDiversity d;
        d.index = i;
        if (duplicate[i]) {
            d.semantic = d.lexical = d.contextual = d.ngram = d.ast = 0.0;
            out.detail[i] = d;
            return;
        }
        double max_f1 = i == 0 ? 0.0 : -1.0;
        for (std::size_t j = 0; j < i; ++j) {
            d.semantic = std::min(d.semantic, store.semantic(i, j));
            d.ngram = std::min(d.ngram, store.ngram(i, j));
            max_f1 = std::max(max_f1, store.contextual(i, j).f1);
            if (store.lexical_lower_bound(i, j) < d.lexical) d.lexical = std::min(d.lexical, store.lexical(i, j));
            if (store.ast_lower_bound(i, j) < d.ast) d.ast = std::min(d.ast, store.ast(i, j));
        }
        d.contextual = 1.0 - std::clamp(max_f1, 0.0, 1.0);
        out.detail[i] = d;
    };

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) score_one(i);
            });
        }
    }

    MetricMeans m;
    const std::size_t first = n >= 2 ? 1 : 0;
    for (std::size_t i = first; i < n; ++i) {
        m.semantic += out.detail[i].semantic;
        m.lexical += out.detail[i].lexical;
        m.contextual += out.detail[i].contextual;
        m.ngram += out.detail[i].ngram;
        m.ast += out.detail[i].ast;
    }
    const double count = static_cast<double>(n - first);
    m.semantic /= count;
    m.lexical /= count;
    m.contextual /= count;
    m.ngram /= count;
    m.ast /= count;
    m.functional = functional_diversity(signatures);
    out.report = aggregate(uniqueness_pct(payloads), m);
    return out;
}

std::string report_csv_header() { return "uniqueness_pct,semantic,lexical,contextual,ngram,ast,functional,total"; }

std::string report_csv_line(const DiversityReport& r) {
    return fixed(r.uniqueness_pct, 2) + "," + fixed(r.semantic, 4) + "," + fixed(r.lexical, 4) + "," +
           fixed(r.contextual, 4) + "," + fixed(r.ngram, 4) + "," + fixed(r.ast, 4) + "," + fixed(r.functional, 4) +
           "," + fixed(r.total, 4);
}

std::string detail_csv_header() { return "index,semantic,lexical,contextual,ngram,ast"; }

std::string detail_csv_line(const PayloadDiversity& d) {
    return std::to_string(d.index) + "," + fixed(d.semantic, 6) + "," + fixed(d.lexical, 6) + "," +
           fixed(d.contextual, 6) + "," + fixed(d.ngram, 6) + "," + fixed(d.ast, 6);
}

}  // namespace sqlforge::diversity
