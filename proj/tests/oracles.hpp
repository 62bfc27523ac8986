#pragma once
// Slow reference implementations used as test oracles. Each is written
// independently of the library algorithm it checks.

#include "sqlforge/embedding.hpp"
#include "sqlforge/knowledge.hpp"
#include "sqlforge/tree.hpp"
#include "sqlforge/util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

// Edit distance by memoized recursion over suffixes.
inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best;
        if (a[i] == b[j]) {
            best = go(i + 1, j + 1);
        } else {
            best = 1 + std::min({go(i + 1, j), go(i, j + 1), go(i + 1, j + 1)});
        }
        memo[key] = best;
        return best;
    };
    return go(0, 0);
}

inline std::set<std::u32string> grams(const std::u32string& s) {
    std::set<std::u32string> out;
    for (std::size_t n = 2; n <= 4; ++n)
        for (std::size_t i = 0; i + n <= s.size(); ++i) out.insert(s.substr(i, n));
    return out;
}

inline double jaccard_distance(const std::u32string& a, const std::u32string& b) {
    const auto ga = grams(a);
    const auto gb = grams(b);
    std::set<std::u32string> uni = ga;
    uni.insert(gb.begin(), gb.end());
    if (uni.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& g : ga) inter += gb.count(g);
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni.size());
}

// Tree edit distance as the cheapest valid (Tai) mapping, found by
// exhaustive search over partial one-to-one node mappings.
struct Flat {
    std::vector<std::string> label;  // preorder
    std::vector<std::size_t> end;    // one past the last descendant in preorder
};

inline void flatten(const sqlforge::Tree& t, Flat& f) {
    const std::size_t me = f.label.size();
    f.label.push_back(t.label);
    f.end.push_back(0);
    for (const auto& c : t.children) flatten(c, f);
    f.end[me] = f.label.size();
}

inline std::size_t tree_edit_distance(const sqlforge::Tree& ta, const sqlforge::Tree& tb) {
    Flat a, b;
    flatten(ta, a);
    flatten(tb, b);
    const std::size_t n = a.label.size();
    const std::size_t m = b.label.size();
    auto anc = [](const Flat& f, std::size_t x, std::size_t y) { return x < y && y < f.end[x]; };
    auto left = [&](const Flat& f, std::size_t x, std::size_t y) { return x < y && !anc(f, x, y); };

    std::vector<std::pair<std::size_t, std::size_t>> mapping;
    std::vector<bool> used(m, false);
    std::size_t best = n + m;
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (i == n) {
            std::size_t cost = (n - mapping.size()) + (m - mapping.size());
            for (auto [x, y] : mapping) cost += a.label[x] != b.label[y];
            best = std::min(best, cost);
            return;
        }
        go(i + 1);
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) continue;
            bool ok = true;
            for (auto [x, y] : mapping) {
                if (anc(a, x, i) != anc(b, y, j) || left(a, x, i) != left(b, y, j)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            used[j] = true;
            mapping.emplace_back(i, j);
            go(i + 1);
            mapping.pop_back();
            used[j] = false;
        }
    };
    go(0);
    return best;
}

inline sqlforge::Tree random_tree(sqlforge::Rng& rng, std::size_t nodes, const std::string& alphabet = "abc") {
    // Attach each new node under a random existing node, as its last child.
    std::vector<std::pair<std::size_t, std::string>> spec;  // parent, label
    spec.push_back({0, std::string(1, alphabet[rng.below(alphabet.size())])});
    for (std::size_t i = 1; i < nodes; ++i)
        spec.push_back({static_cast<std::size_t>(rng.below(i)), std::string(1, alphabet[rng.below(alphabet.size())])});
    std::function<sqlforge::Tree(std::size_t)> build = [&](std::size_t k) {
        sqlforge::Tree t(spec[k].second);
        for (std::size_t c = 1; c < spec.size(); ++c)
            if (spec[c].first == k && c != k) t.children.push_back(build(c));
        return t;
    };
    return build(0);
}

// Greedy MMR re-scored from scratch at every step; ties to the lowest id.
inline std::vector<std::size_t> mmr(const std::vector<sqlforge::Vector>& docs, const sqlforge::Vector& query,
                                    std::size_t k, double lambda) {
    std::vector<std::size_t> chosen;
    while (chosen.size() < k) {
        std::size_t best_id = docs.size();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t d = 0; d < docs.size(); ++d) {
            if (std::find(chosen.begin(), chosen.end(), d) != chosen.end()) continue;
            double redundancy = 0.0;
            bool any = false;
            for (std::size_t s : chosen) {
                const double c = sqlforge::cosine(docs[d], docs[s]);
                redundancy = any ? std::max(redundancy, c) : c;
                any = true;
            }
            const double score = lambda * sqlforge::cosine(docs[d], query) - (1.0 - lambda) * redundancy;
            if (score > best_score) {
                best_score = score;
                best_id = d;
            }
        }
        chosen.push_back(best_id);
    }
    return chosen;
}

inline sqlforge::Vector random_unit(sqlforge::Rng& rng, std::size_t dim) {
    sqlforge::Vector v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = static_cast<float>(rng.uniform() * 2.0 - 1.0);
            norm += static_cast<double>(x) * x;
        }
    } while (norm < 1e-6);
    for (auto& x : v) x = static_cast<float>(x / std::sqrt(norm));
    return v;
}

inline sqlforge::knowledge::VectorIndex make_index(const std::vector<sqlforge::Vector>& docs) {
    std::vector<sqlforge::knowledge::EmbeddedChunk> entries;
    for (std::size_t i = 0; i < docs.size(); ++i)
        entries.push_back({{i, "doc" + std::to_string(i), "random", 0}, docs[i]});
    return sqlforge::knowledge::VectorIndex(std::move(entries), docs.front().size());
}

inline std::u32string random_text(sqlforge::Rng& rng, std::size_t max_len, const std::u32string& alphabet) {
    const std::size_t len = rng.below(max_len + 1);
    std::u32string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
    return s;
}

}  // namespace oracle
