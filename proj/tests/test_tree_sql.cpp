#include "oracles.hpp"
#include "sqlforge/sql.hpp"
#include "sqlforge/tree.hpp"

#include <catch_amalgamated.hpp>

using namespace sqlforge;

namespace {

Tree leaf(const char* l) { return Tree(l); }

}  // namespace

TEST_CASE("tree size and s-expression form") {
    const Tree t("a", {leaf("b"), Tree("c", {leaf("d")})});
    CHECK(t.size() == 4);
    CHECK(to_sexpr(t) == "(a b (c d))");
    CHECK(to_sexpr(leaf("x")) == "x");
}

TEST_CASE("edit distance on small hand-checked trees") {
    CHECK(tree_edit_distance(leaf("a"), leaf("a")) == 0);
    CHECK(tree_edit_distance(leaf("a"), leaf("b")) == 1);
    const Tree t("f", {Tree("d", {leaf("a"), Tree("c", {leaf("b")})}), leaf("e")});
    CHECK(tree_edit_distance(t, t) == 0);
    // Classic example: delete c (children move up) and insert c over d.
    const Tree u("f", {Tree("c", {Tree("d", {leaf("a"), leaf("b")})}), leaf("e")});
    CHECK(tree_edit_distance(t, u) == 2);
    // Single node against a chain of three.
    CHECK(tree_edit_distance(leaf("a"), Tree("a", {Tree("b", {leaf("c")})})) == 2);
}

TEST_CASE("prepared trees give the same distance") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto a = oracle::random_tree(rng, 1 + rng.below(9));
        const auto b = oracle::random_tree(rng, 1 + rng.below(9));
        REQUIRE(tree_edit_distance(PreparedTree(a), PreparedTree(b)) == tree_edit_distance(a, b));
    }
}

TEST_CASE("edit distance agrees with exhaustive mapping search") {
    Rng rng(11);
    for (int i = 0; i < 150; ++i) {
        const auto a = oracle::random_tree(rng, 1 + rng.below(6));
        const auto b = oracle::random_tree(rng, 1 + rng.below(6));
        REQUIRE(tree_edit_distance(a, b) == oracle::tree_edit_distance(a, b));
    }
}

TEST_CASE("edit distance is a metric on random trees") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        const auto a = oracle::random_tree(rng, 1 + rng.below(7));
        const auto b = oracle::random_tree(rng, 1 + rng.below(7));
        const auto c = oracle::random_tree(rng, 1 + rng.below(7));
        const auto ab = tree_edit_distance(a, b);
        REQUIRE(ab == tree_edit_distance(b, a));
        REQUIRE(ab <= a.size() + b.size());
        REQUIRE(ab <= tree_edit_distance(a, c) + tree_edit_distance(c, b));
    }
}

TEST_CASE("lexer keeps MySQL token kinds apart") {
    const auto r = sql::tokenize("SELECT @@version, @x, 0x7e, 'it''s', 12 # tail");
    REQUIRE_FALSE(r.error_pos.has_value());
    std::vector<sql::TokenKind> kinds;
    for (const auto& t : r.tokens) kinds.push_back(t.kind);
    using K = sql::TokenKind;
    CHECK(kinds == std::vector<K>{K::Keyword, K::SystemVariable, K::Operator, K::Variable, K::Operator, K::Hex,
                                  K::Operator, K::String, K::Operator, K::Number});
    CHECK(r.tokens[7].text == "it's");
}

TEST_CASE("versioned comments are lexed as code") {
    const auto r = sql::tokenize("/*!50000 UNION*/ SELECT /* gone */ 1");
    REQUIRE_FALSE(r.error_pos.has_value());
    REQUIRE(r.tokens.size() == 3);
    CHECK(r.tokens[0].text == "UNION");
}

TEST_CASE("unterminated string is an error unless permissive") {
    CHECK(sql::tokenize("'abc").error_pos.has_value());
    const auto p = sql::tokenize("'abc", true);
    CHECK_FALSE(p.error_pos.has_value());
    REQUIRE(p.tokens.size() == 1);
    CHECK(p.tokens[0].text == "abc");
}

TEST_CASE("node counting rule on bare selects") {
    const auto a = sql::parse_sql("SELECT a FROM t");
    REQUIRE(a.ok());
    CHECK(to_sexpr(*a.tree) == "(select id:a (from table:t))");
    CHECK(a.tree->size() == 4);
    CHECK(sql::parse_sql("SELECT a").tree->size() == 2);
    CHECK(sql::parse_sql("SELECT a, b").tree->size() == 3);
}

TEST_CASE("tautology payload parses into an OR of two equalities") {
    const auto r = sql::parse_payload("' OR '1'='1");
    REQUIRE(r.ok());
    CHECK(to_sexpr(*r.tree) ==
          "(select id:id id:name (from table:users) (where (or (= id:name str:) (= str:1 str:1))))");
}

TEST_CASE("framing wraps the payload in the vulnerable query") {
    CHECK(sql::frame_in_template("x") == "SELECT id, name FROM users WHERE name = 'x'");
}

TEST_CASE("malformed payload is a parse error with a token fallback") {
    const auto r = sql::parse_payload("' banana ((");
    CHECK_FALSE(r.ok());
    CHECK_FALSE(r.error.empty());
    const auto t = sql::token_tree("' banana ((");
    CHECK(t.label == "tokens");
    // The raw payload's leading quote opens a string that runs to the end.
    CHECK(t.children.size() == 1);
    CHECK(sql::token_tree("banana ((").children.size() == 3);
}

TEST_CASE("union and comment payloads parse") {
    for (const char* p : {"' UNION SELECT username, password FROM users-- -", "admin'-- ", "' OR 1=1#",
                          "' AND SLEEP(5)-- -", "' OR 'a'='a' /*", "' ORDER BY 2-- -"}) {
        INFO(p);
        CHECK(sql::parse_payload(p).ok());
    }
}

TEST_CASE("stacked statements parse into a flat node") {
    const auto r = sql::parse_payload("'; DROP TABLE users-- ");
    REQUIRE(r.ok());
    CHECK(r.tree->size() > 1);
}
