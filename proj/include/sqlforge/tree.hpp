#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sqlforge {

/// Rooted, labeled, ordered tree.
struct Tree {
    std::string label;
    std::vector<Tree> children;

    Tree() = default;
    explicit Tree(std::string l) : label(std::move(l)) {}
    Tree(std::string l, std::vector<Tree> c) : label(std::move(l)), children(std::move(c)) {}

    std::size_t size() const;
    bool operator==(const Tree&) const = default;
};

/// "(label child child ...)" form; leaves print bare.
std::string to_sexpr(const Tree& tree);

/// Zhang-Shasha ordered tree edit distance with unit insert, delete and
/// relabel costs.
std::size_t tree_edit_distance(const Tree& a, const Tree& b);

/// Postorder-flattened tree for repeated distance queries.
class PreparedTree {
public:
    explicit PreparedTree(const Tree& tree);
    std::size_t size() const noexcept { return labels_.size(); }

private:
    std::vector<std::string> labels_;
    std::vector<std::size_t> label_hash_;
    std::vector<std::size_t> leftmost_;  // leftmost leaf descendant, postorder index
    std::vector<std::size_t> keyroots_;

    friend std::size_t tree_edit_distance(const PreparedTree& a, const PreparedTree& b);
};

std::size_t tree_edit_distance(const PreparedTree& a, const PreparedTree& b);

}  // namespace sqlforge
