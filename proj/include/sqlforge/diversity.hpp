#pragma once
// Payload-set diversity: semantic, lexical, n-gram, contextual, AST and
// functional metrics, the aggregate report, and the runtime filter gate.

#include "sqlforge/embedding.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/tree.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::diversity {

// ---------------------------------------------------------------------------
// Pairwise primitives

/// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// levenshtein / max length; two empty strings give 0.
double normalized_levenshtein(std::string_view a, std::string_view b);

/// Sorted, de-duplicated character 2-, 3- and 4-grams.
using GramSet = std::vector<std::u32string>;
GramSet char_ngrams(std::string_view text);

/// 1 - |A∩B| / |A∪B|; two empty sets are identical (distance 0).
double jaccard_distance(const GramSet& a, const GramSet& b);

/// Lowercased word and operator tokens. Whitespace and `( ) , ; . \``
/// separate tokens and are dropped; quotes and operators (including
/// comment markers) are kept as single tokens.
std::vector<std::string> context_tokens(std::string_view text);

struct TokenMatch {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy token-embedding match. Two empty token lists match perfectly;
/// one empty list matches nothing.
TokenMatch token_match(std::string_view a, std::string_view b, const Embedder& embedder);

using TreeBuilder = std::function<Tree(std::string_view)>;

/// Parse tree of the payload framed in the vulnerable query, or the flat
/// token tree of the raw payload when it does not parse.
Tree payload_tree(std::string_view payload);

// ---------------------------------------------------------------------------
// Candidate versus accepted set. An empty set is maximally diverse.

double semantic_diversity(std::string_view p_new, std::span<const std::string> accepted, const Embedder& embedder);
double lexical_diversity(std::string_view p_new, std::span<const std::string> accepted);
double ngram_diversity(std::string_view p_new, std::span<const std::string> accepted);

struct ContextualResult {
    double max_f1 = 0.0;
    double diversity = 1.0;
};
ContextualResult contextual_similarity(std::string_view p_new, std::span<const std::string> accepted,
                                       const Embedder& embedder);

double ast_diversity(std::string_view p_new, std::span<const std::string> accepted,
                     const TreeBuilder& builder = payload_tree);

/// Distinct signatures / signatures. Throws EmptyInput on an empty list.
double functional_diversity(std::span<const eval::FunctionalSignature> signatures);

// ---------------------------------------------------------------------------
// Reports

struct MetricMeans {
    double semantic = 0.0;
    double lexical = 0.0;
    double contextual = 0.0;  // 1 - max F1
    double ngram = 0.0;
    double ast = 0.0;
    double functional = 0.0;
};

struct DiversityReport {
    double uniqueness_pct = 0.0;
    double semantic = 0.0;
    double lexical = 0.0;
    double contextual = 0.0;
    double ngram = 0.0;
    double ast = 0.0;
    double functional = 0.0;
    double total = 0.0;
};

/// total = mean of the six metric means.
DiversityReport aggregate(double uniqueness_pct, const MetricMeans& means);

/// Distinct texts / texts x 100. Throws EmptyInput on an empty list.
double uniqueness_pct(std::span<const std::string> payloads);

// ---------------------------------------------------------------------------
// Incremental feature store shared by the runtime filter and set scoring.

class FeatureStore {
public:
    explicit FeatureStore(std::shared_ptr<const Embedder> embedder, TreeBuilder builder = payload_tree,
                          bool with_trees = true);

    /// Computes and stores features for `text`; returns its position.
    std::size_t add(std::string_view text);
    std::size_t size() const noexcept { return items_.size(); }
    const std::string& text(std::size_t i) const { return items_.at(i).text; }

    double semantic(std::size_t i, std::size_t j) const;
    double lexical(std::size_t i, std::size_t j) const;
    double ngram(std::size_t i, std::size_t j) const;
    TokenMatch contextual(std::size_t i, std::size_t j) const;
    double ast(std::size_t i, std::size_t j) const;

    /// Lower bounds used to skip pairs that cannot beat a running minimum.
    double lexical_lower_bound(std::size_t i, std::size_t j) const;
    double ast_lower_bound(std::size_t i, std::size_t j) const;

private:
    struct Item {
        std::string text;
        std::u32string chars;
        GramSet grams;
        Vector embedding;
        std::vector<std::size_t> tokens;  // ids into the token vocabulary
        std::unique_ptr<PreparedTree> tree;
    };

    std::size_t token_id(const std::string& token);
    float token_cosine(std::size_t a, std::size_t b) const;

    std::shared_ptr<const Embedder> embedder_;
    TreeBuilder builder_;
    bool with_trees_;
    std::vector<Item> items_;
    std::map<std::string, std::size_t, std::less<>> vocabulary_;
    std::vector<Vector> token_vectors_;
    std::vector<std::vector<float>> token_cos_;  // lower triangle, row t has t+1 entries
};

// ---------------------------------------------------------------------------
// Runtime filter

struct FilterResult {
    bool passed = true;
    double semantic = 1.0;       // min 1 - cos over the set
    double lexical = 1.0;        // min normalized Levenshtein over the set
    double contextual_f1 = 0.0;  // max token-match F1 over the set
};

/// semantic > theta AND lexical > theta AND contextual F1 < theta.
/// Throws InvalidParams unless 0 < theta < 1.
FilterResult passes_filter(std::string_view p_new, std::span<const std::string> accepted, double theta,
                           const Embedder& embedder);

/// Same predicate over store positions.
FilterResult passes_filter(const FeatureStore& store, std::size_t candidate, std::span<const std::size_t> accepted,
                           double theta);

// ---------------------------------------------------------------------------
// Post-hoc set scoring. Each payload is compared with the payloads before
// it; the first payload is skipped when there are at least two.

struct PayloadDiversity {
    std::size_t index = 0;
    double semantic = 1.0;
    double lexical = 1.0;
    double contextual = 1.0;
    double ngram = 1.0;
    double ast = 1.0;
};

struct SetScore {
    DiversityReport report;
    std::vector<PayloadDiversity> detail;  // one row per payload, including the first
};

/// `signatures` must hold one entry per payload.
SetScore score_set(std::span<const std::string> payloads, std::span<const eval::FunctionalSignature> signatures,
                   std::shared_ptr<const Embedder> embedder, const TreeBuilder& builder = payload_tree,
                   std::size_t workers = 0);

std::string report_csv_header();
std::string report_csv_line(const DiversityReport& report);
std::string detail_csv_header();
std::string detail_csv_line(const PayloadDiversity& row);

}  // namespace sqlforge::diversity
