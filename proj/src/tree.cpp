#include "sqlforge/tree.hpp"

#include <algorithm>
#include <functional>

namespace sqlforge {

std::size_t Tree::size() const {
    std::size_t n = 1;
    for (const auto& c : children) n += c.size();
    return n;
}

std::string to_sexpr(const Tree& tree) {
    if (tree.children.empty()) return tree.label;
    std::string out = "(" + tree.label;
    for (const auto& c : tree.children) out += " " + to_sexpr(c);
    out += ")";
    return out;
}

namespace {

std::size_t flatten(const Tree& t, std::vector<std::string>& labels, std::vector<std::size_t>& leftmost) {
    std::size_t first_leaf = SIZE_MAX;
    for (const auto& c : t.children) {
        std::size_t lm = flatten(c, labels, leftmost);
        if (first_leaf == SIZE_MAX) first_leaf = lm;
    }
    const std::size_t me = labels.size();
    labels.push_back(t.label);
    leftmost.push_back(first_leaf == SIZE_MAX ? me : first_leaf);
    return leftmost.back();
}

}  // namespace

PreparedTree::PreparedTree(const Tree& tree) {
    flatten(tree, labels_, leftmost_);
    const std::size_t n = labels_.size();
    label_hash_.reserve(n);
    for (const auto& l : labels_) label_hash_.push_back(std::hash<std::string>{}(l));
    // Keyroots: the highest node for each distinct leftmost leaf.
    std::vector<bool> seen(n, false);
    for (std::size_t i = n; i-- > 0;) {
        if (!seen[leftmost_[i]]) {
            seen[leftmost_[i]] = true;
            keyroots_.push_back(i);
        }
    }
    std::sort(keyroots_.begin(), keyroots_.end());
}

std::size_t tree_edit_distance(const Tree& a, const Tree& b) {
    return tree_edit_distance(PreparedTree(a), PreparedTree(b));
}

std::size_t tree_edit_distance(const PreparedTree& fa, const PreparedTree& fb) {
    const std::size_t n = fa.size();
    const std::size_t m = fb.size();

    std::vector<std::size_t> tree_dist(n * m, 0);
    std::vector<std::size_t> forest((n + 1) * (m + 1), 0);
    auto td = [&](std::size_t i, std::size_t j) -> std::size_t& { return tree_dist[i * m + j]; };
    auto same = [&](std::size_t i, std::size_t j) {
        return fa.label_hash_[i] == fb.label_hash_[j] && fa.labels_[i] == fb.labels_[j];
    };

    for (std::size_t kr_a : fa.keyroots_) {
        for (std::size_t kr_b : fb.keyroots_) {
            const std::size_t la = fa.leftmost_[kr_a];
            const std::size_t lb = fb.leftmost_[kr_b];
            const std::size_t rows = kr_a - la + 2;
            const std::size_t cols = kr_b - lb + 2;
            auto fd = [&](std::size_t r, std::size_t c) -> std::size_t& { return forest[r * cols + c]; };
            fd(0, 0) = 0;
            for (std::size_t r = 1; r < rows; ++r) fd(r, 0) = fd(r - 1, 0) + 1;
            for (std::size_t c = 1; c < cols; ++c) fd(0, c) = fd(0, c - 1) + 1;
            for (std::size_t r = 1; r < rows; ++r) {
                const std::size_t i = la + r - 1;
                for (std::size_t c = 1; c < cols; ++c) {
                    const std::size_t j = lb + c - 1;
                    const std::size_t del = fd(r - 1, c) + 1;
                    const std::size_t ins = fd(r, c - 1) + 1;
                    if (fa.leftmost_[i] == la && fb.leftmost_[j] == lb) {
                        const std::size_t rel = fd(r - 1, c - 1) + (same(i, j) ? 0 : 1);
                        fd(r, c) = std::min({del, ins, rel});
                        td(i, j) = fd(r, c);
                    } else {
                        const std::size_t pr = fa.leftmost_[i] - la;
                        const std::size_t pc = fb.leftmost_[j] - lb;
                        fd(r, c) = std::min({del, ins, fd(pr, pc) + td(i, j)});
                    }
                }
            }
        }
    }
    return td(n - 1, m - 1);
}

}  // namespace sqlforge
