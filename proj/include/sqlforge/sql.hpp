#pragma once
// Permissive MySQL-flavoured lexer and recursive-descent parser covering
// SELECT / UNION / boolean expressions. Other statements (stacked queries)
// parse into a flat token node.

#include "sqlforge/tree.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::sql {

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Hex,
    Variable,        // @name
    SystemVariable,  // @@name
    Operator,
    Unknown,
};

struct Token {
    TokenKind kind;
    std::string text;  // keywords upper-cased; strings unquoted
    std::size_t pos = 0;
};

struct LexResult {
    std::vector<Token> tokens;
    std::optional<std::size_t> error_pos;
    std::string error;
};

/// Comments (`--`, `#`, `/* */`) are dropped; the body of `/*! ... */` is
/// lexed as code. With `permissive`, an unterminated string runs to the
/// end of input instead of failing.
LexResult tokenize(std::string_view sql, bool permissive = false);

struct ParseResult {
    std::optional<Tree> tree;
    std::size_t error_pos = 0;
    std::string error;

    bool ok() const noexcept { return tree.has_value(); }
};

ParseResult parse_sql(std::string_view sql);

/// The vulnerable query every payload is embedded into.
inline constexpr std::string_view kTemplatePrefix = "SELECT id, name FROM users WHERE name = '";
inline constexpr std::string_view kTemplateSuffix = "'";

std::string frame_in_template(std::string_view payload);

/// parse_sql on the framed payload.
ParseResult parse_payload(std::string_view payload);

/// Depth-1 fallback tree: root "tokens" with one child per token.
Tree token_tree(std::string_view payload);

/// Leaf label for a token, shared by the parser and token_tree.
std::string token_label(const Token& token);

}  // namespace sqlforge::sql
