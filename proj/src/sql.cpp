#include "sqlforge/sql.hpp"

#include "sqlforge/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace sqlforge::sql {

namespace {

const std::set<std::string, std::less<>>& keywords() {
    static const std::set<std::string, std::less<>> kw = {
        "ALL", "ALTER", "AND", "AS", "ASC", "BETWEEN", "BY", "CALL", "CASE", "CREATE", "CROSS",
        "DECLARE", "DELETE", "DESC", "DISTINCT", "DIV", "DO", "DROP", "DUMPFILE", "ELSE", "END",
        "ESCAPE", "EXEC", "EXECUTE", "EXISTS", "FALSE", "FOR", "FROM", "GRANT", "GROUP", "HANDLER",
        "HAVING", "IN", "INNER", "INSERT", "INTERVAL", "INTO", "IS", "JOIN", "LEFT", "LIKE", "LIMIT",
        "LOAD", "MOD", "NATURAL", "NOT", "NULL", "OFFSET", "ON", "OR", "ORDER", "OUTER", "OUTFILE",
        "PROCEDURE", "REGEXP", "REPLACE", "RIGHT", "RLIKE", "SELECT", "SET", "SHOW", "SOUNDS",
        "STRAIGHT_JOIN", "THEN", "TRUE", "TRUNCATE", "UNION", "UPDATE", "USE", "USING", "WAITFOR",
        "WHEN", "WHERE", "XOR", "COLLATE", "BINARY",
    };
    return kw;
}

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

}  // namespace

LexResult tokenize(std::string_view s, bool permissive) {
    LexResult out;
    std::size_t i = 0;
    int versioned_depth = 0;
    const std::size_t n = s.size();

    auto push = [&](TokenKind k, std::string text, std::size_t pos) {
        out.tokens.push_back(Token{k, std::move(text), pos});
    };

    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && s[i + 1] == '-') {
            while (i < n && s[i] != '\n') ++i;
            continue;
        }
        if (c == '#') {
            while (i < n && s[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && i + 1 < n && s[i + 1] == '*') {
            if (i + 2 < n && s[i + 2] == '!') {
                i += 3;
                while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                ++versioned_depth;
                continue;
            }
            auto end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? n : end + 2;
            continue;
        }
        if (c == '*' && i + 1 < n && s[i + 1] == '/' && versioned_depth > 0) {
            --versioned_depth;
            i += 2;
            continue;
        }
        const std::size_t start = i;
        if (c == '\'' || c == '"') {
            const char quote = static_cast<char>(c);
            std::string value;
            ++i;
            bool closed = false;
            while (i < n) {
                if (s[i] == '\\' && i + 1 < n) {
                    value.push_back(s[i + 1]);
                    i += 2;
                    continue;
                }
                if (s[i] == quote) {
                    if (i + 1 < n && s[i + 1] == quote) {
                        value.push_back(quote);
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                value.push_back(s[i++]);
            }
            if (!closed && !permissive) {
                out.error_pos = start;
                out.error = "unterminated string literal";
                return out;
            }
            push(TokenKind::String, std::move(value), start);
            continue;
        }
        if (c == '`') {
            auto end = s.find('`', i + 1);
            if (end == std::string_view::npos) {
                if (!permissive) {
                    out.error_pos = start;
                    out.error = "unterminated quoted identifier";
                    return out;
                }
                end = n;
            }
            push(TokenKind::Identifier, std::string(s.substr(i + 1, end - i - 1)), start);
            i = std::min(n, end + 1);
            continue;
        }
        if ((c == 'x' || c == 'X' || c == 'b' || c == 'B') && i + 1 < n && s[i + 1] == '\'') {
            auto end = s.find('\'', i + 2);
            if (end != std::string_view::npos) {
                push(TokenKind::Hex, "0x" + to_lower(s.substr(i + 2, end - i - 2)), start);
                i = end + 1;
                continue;
            }
        }
        if (c == '0' && i + 1 < n && (s[i + 1] == 'x' || s[i + 1] == 'X') && i + 2 < n &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            i += 2;
            while (i < n && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
            push(TokenKind::Hex, to_lower(s.substr(start, i - start)), start);
            continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            while (i < n && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
            if (i < n && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < n && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < n && std::isdigit(static_cast<unsigned char>(s[j]))) {
                    i = j;
                    while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
                }
            }
            // MySQL reads "1AND" as number then keyword; identifiers may not
            // start with digits here.
            push(TokenKind::Number, std::string(s.substr(start, i - start)), start);
            continue;
        }
        if (c == '@') {
            const bool system = i + 1 < n && s[i + 1] == '@';
            i += system ? 2 : 1;
            const std::size_t name_start = i;
            while (i < n && (is_ident_char(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
            push(system ? TokenKind::SystemVariable : TokenKind::Variable,
                 to_lower(s.substr(name_start, i - name_start)), start);
            continue;
        }
        if (is_ident_start(c)) {
            while (i < n && is_ident_char(static_cast<unsigned char>(s[i]))) ++i;
            std::string word(s.substr(start, i - start));
            std::string upper = word;
            for (char& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            if (keywords().count(upper)) push(TokenKind::Keyword, std::move(upper), start);
            else push(TokenKind::Identifier, std::move(word), start);
            continue;
        }
        static constexpr std::array<std::string_view, 11> multi = {"<=>", "<=", ">=", "<>", "!=", "||",
                                                                   "&&", "<<", ">>", ":=", "=="};
        bool matched = false;
        for (auto op : multi) {
            if (s.substr(i, op.size()) == op) {
                push(TokenKind::Operator, std::string(op), start);
                i += op.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::string_view("=<>!+-*/%&|^~(),;.").find(static_cast<char>(c)) != std::string_view::npos) {
            push(TokenKind::Operator, std::string(1, static_cast<char>(c)), start);
            ++i;
            continue;
        }
        if (!permissive) {
            out.error_pos = start;
            out.error = std::string("unexpected character '") + static_cast<char>(c) + "'";
            return out;
        }
        push(TokenKind::Unknown, std::string(1, static_cast<char>(c)), start);
        ++i;
    }
    return out;
}

std::string token_label(const Token& t) {
    switch (t.kind) {
        case TokenKind::Identifier: return "id:" + to_lower(t.text);
        case TokenKind::Keyword: return to_lower(t.text);
        case TokenKind::Number: return "num:" + t.text;
        case TokenKind::String: return "str:" + t.text;
        case TokenKind::Hex: return "hex:" + t.text;
        case TokenKind::Variable: return "var:@" + t.text;
        case TokenKind::SystemVariable: return "var:@@" + t.text;
        case TokenKind::Operator: return t.text;
        case TokenKind::Unknown: return "?" + t.text;
    }
    return t.text;
}

namespace {

struct ParseFailure {
    std::size_t pos;
    std::string message;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, std::size_t end_pos)
        : toks_(std::move(tokens)), end_pos_(end_pos) {}

    Tree script() {
        std::vector<Tree> statements;
        while (!at_end()) {
            if (is_op(";")) {
                advance();
                continue;
            }
            statements.push_back(statement());
            if (!at_end() && !is_op(";")) fail("expected end of statement");
        }
        if (statements.empty()) fail("empty statement");
        if (statements.size() == 1) return std::move(statements.front());
        return Tree("script", std::move(statements));
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::size_t end_pos_;

    bool at_end() const { return pos_ >= toks_.size(); }
    const Token* peek(std::size_t ahead = 0) const {
        return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
    }
    Token advance() { return toks_[pos_++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseFailure{at_end() ? end_pos_ : toks_[pos_].pos, msg};
    }

    bool is_kw(std::string_view kw, std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t && t->kind == TokenKind::Keyword && t->text == kw;
    }
    bool is_op(std::string_view op, std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t && t->kind == TokenKind::Operator && t->text == op;
    }
    bool accept_kw(std::string_view kw) {
        if (!is_kw(kw)) return false;
        ++pos_;
        return true;
    }
    bool accept_op(std::string_view op) {
        if (!is_op(op)) return false;
        ++pos_;
        return true;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) fail("expected " + std::string(kw));
    }
    void expect_op(std::string_view op) {
        if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
    }

    bool is_name_token(std::size_t ahead = 0) const {
        const Token* t = peek(ahead);
        return t && t->kind == TokenKind::Identifier;
    }

    Tree statement() {
        if (is_kw("SELECT") || is_op("(")) return query_expression();
        const Token* t = peek();
        if (t && t->kind == TokenKind::Keyword) {
            static const std::set<std::string, std::less<>> stmt_kw = {
                "INSERT", "UPDATE", "DELETE", "DROP", "CREATE", "ALTER", "SHOW", "SET", "DECLARE",
                "EXEC", "EXECUTE", "WAITFOR", "TRUNCATE", "REPLACE", "GRANT", "CALL", "HANDLER", "DO",
                "USE", "LOAD"};
            if (stmt_kw.count(t->text)) return generic_statement();
        }
        fail("expected statement");
    }

    Tree generic_statement() {
        Tree node("stmt:" + to_lower(advance().text));
        while (!at_end() && !is_op(";")) node.children.emplace_back(token_label(advance()));
        return node;
    }

    // select_core (UNION [ALL|DISTINCT] select_core)* [ORDER BY] [LIMIT]
    Tree query_expression() {
        Tree left = select_core();
        std::vector<Tree> parts;
        std::string union_label;
        while (is_kw("UNION")) {
            advance();
            std::string label = "union";
            if (accept_kw("ALL")) label = "union_all";
            else accept_kw("DISTINCT");
            if (parts.empty()) {
                parts.push_back(std::move(left));
                union_label = label;
            } else if (label != union_label) {
                Tree merged(union_label, std::move(parts));
                parts.clear();
                parts.push_back(std::move(merged));
                union_label = label;
            }
            parts.push_back(select_core());
        }
        Tree result = parts.empty() ? std::move(left) : Tree(union_label, std::move(parts));
        tail_clauses(result);
        return result;
    }

    Tree select_core() {
        if (accept_op("(")) {
            Tree inner = query_expression();
            expect_op(")");
            return inner;
        }
        expect_kw("SELECT");
        Tree node("select");
        if (accept_kw("DISTINCT")) node.children.emplace_back("distinct");
        else accept_kw("ALL");
        do {
            node.children.push_back(select_item());
        } while (accept_op(","));
        if (accept_kw("INTO")) into_clause(node);
        if (accept_kw("FROM")) node.children.push_back(from_clause());
        if (accept_kw("WHERE")) node.children.push_back(Tree("where", {expression()}));
        if (is_kw("GROUP")) {
            advance();
            expect_kw("BY");
            Tree g("group_by");
            do {
                g.children.push_back(expression());
            } while (accept_op(","));
            node.children.push_back(std::move(g));
        }
        if (accept_kw("HAVING")) node.children.push_back(Tree("having", {expression()}));
        return node;
    }

    void tail_clauses(Tree& node) {
        if (is_kw("ORDER")) {
            advance();
            expect_kw("BY");
            Tree o("order_by");
            do {
                Tree item = expression();
                if (accept_kw("DESC")) item = Tree("desc", {std::move(item)});
                else accept_kw("ASC");
                o.children.push_back(std::move(item));
            } while (accept_op(","));
            node.children.push_back(std::move(o));
        }
        if (accept_kw("LIMIT")) {
            Tree l("limit", {expression()});
            if (accept_op(",") || accept_kw("OFFSET")) l.children.push_back(expression());
            node.children.push_back(std::move(l));
        }
        if (accept_kw("PROCEDURE")) {
            Tree p("procedure", {primary()});
            node.children.push_back(std::move(p));
        }
        if (accept_kw("INTO")) into_clause(node);
    }

    void into_clause(Tree& node) {
        Tree into("into");
        if (accept_kw("OUTFILE")) into.children.emplace_back("outfile");
        else if (accept_kw("DUMPFILE")) into.children.emplace_back("dumpfile");
        do {
            into.children.push_back(primary());
        } while (accept_op(","));
        node.children.push_back(std::move(into));
    }

    Tree select_item() {
        if (accept_op("*")) return Tree("*");
        Tree expr = expression();
        if (accept_kw("AS")) {
            const Token* t = peek();
            if (!t || (t->kind != TokenKind::Identifier && t->kind != TokenKind::String)) fail("expected alias");
            return Tree("as", {std::move(expr), Tree("alias:" + to_lower(advance().text))});
        }
        if (is_name_token()) return Tree("as", {std::move(expr), Tree("alias:" + to_lower(advance().text))});
        return expr;
    }

    Tree from_clause() {
        Tree from("from");
        from.children.push_back(table_ref());
        while (true) {
            if (accept_op(",")) {
                from.children.push_back(table_ref());
                continue;
            }
            std::string join;
            if (is_kw("JOIN") || is_kw("INNER") || is_kw("LEFT") || is_kw("RIGHT") || is_kw("CROSS") ||
                is_kw("NATURAL") || is_kw("STRAIGHT_JOIN")) {
                while (accept_kw("INNER") || accept_kw("LEFT") || accept_kw("RIGHT") || accept_kw("CROSS") ||
                       accept_kw("NATURAL") || accept_kw("OUTER")) {
                }
                if (!accept_kw("STRAIGHT_JOIN")) expect_kw("JOIN");
                Tree j("join", {table_ref()});
                if (accept_kw("ON")) j.children.push_back(expression());
                else if (accept_kw("USING")) j.children.push_back(primary());
                from.children.push_back(std::move(j));
                continue;
            }
            break;
        }
        return from;
    }

    Tree table_ref() {
        Tree t;
        if (accept_op("(")) {
            t = Tree("subquery", {query_expression()});
            expect_op(")");
        } else {
            const Token* tok = peek();
            if (!tok || (tok->kind != TokenKind::Identifier)) fail("expected table name");
            std::string name = to_lower(advance().text);
            while (accept_op(".")) {
                const Token* part = peek();
                if (!part || part->kind != TokenKind::Identifier) fail("expected name after '.'");
                name += "." + to_lower(advance().text);
            }
            t = Tree("table:" + name);
        }
        if (accept_kw("AS") || is_name_token()) {
            if (!is_name_token()) fail("expected alias");
            t = Tree("as", {std::move(t), Tree("alias:" + to_lower(advance().text))});
        }
        return t;
    }

    // Precedence: OR/|| < XOR < AND/&& < NOT < predicate < bit-or < bit-and
    // < shift < additive < multiplicative < bit-xor < unary.
    Tree expression() { return or_expr(); }

    Tree or_expr() {
        Tree left = xor_expr();
        while (is_kw("OR") || is_op("||")) {
            advance();
            left = Tree("or", {std::move(left), xor_expr()});
        }
        return left;
    }

    Tree xor_expr() {
        Tree left = and_expr();
        while (accept_kw("XOR")) left = Tree("xor", {std::move(left), and_expr()});
        return left;
    }

    Tree and_expr() {
        Tree left = not_expr();
        while (is_kw("AND") || is_op("&&")) {
            advance();
            left = Tree("and", {std::move(left), not_expr()});
        }
        return left;
    }

    Tree not_expr() {
        if (accept_kw("NOT")) return Tree("not", {not_expr()});
        return predicate();
    }

    static bool is_comparison(const Token* t) {
        if (!t || t->kind != TokenKind::Operator) return false;
        static const std::set<std::string, std::less<>> ops = {"=", "<", ">", "<=", ">=", "<>", "!=", "<=>", "==", ":="};
        return ops.count(t->text) > 0;
    }

    Tree predicate() {
        Tree left = bit_or();
        while (true) {
            if (is_comparison(peek())) {
                std::string op = advance().text;
                if (is_kw("ANY") || is_kw("ALL") || is_kw("SOME")) advance();
                left = Tree(op, {std::move(left), bit_or()});
                continue;
            }
            bool negated = false;
            if (is_kw("NOT") && (is_kw("IN", 1) || is_kw("LIKE", 1) || is_kw("BETWEEN", 1) ||
                                 is_kw("REGEXP", 1) || is_kw("RLIKE", 1))) {
                advance();
                negated = true;
            }
            Tree node;
            if (accept_kw("IN")) {
                expect_op("(");
                Tree in("in", {std::move(left)});
                if (is_kw("SELECT")) {
                    in.children.push_back(Tree("subquery", {query_expression()}));
                } else if (!is_op(")")) {
                    do {
                        in.children.push_back(expression());
                    } while (accept_op(","));
                }
                expect_op(")");
                node = std::move(in);
            } else if (accept_kw("LIKE")) {
                node = Tree("like", {std::move(left), bit_or()});
                if (accept_kw("ESCAPE")) node.children.push_back(primary());
            } else if (accept_kw("REGEXP") || accept_kw("RLIKE")) {
                node = Tree("regexp", {std::move(left), bit_or()});
            } else if (accept_kw("BETWEEN")) {
                Tree lo = bit_or();
                expect_kw("AND");
                node = Tree("between", {std::move(left), std::move(lo), bit_or()});
            } else if (is_kw("SOUNDS") && is_kw("LIKE", 1)) {
                advance();
                advance();
                node = Tree("sounds_like", {std::move(left), bit_or()});
            } else if (accept_kw("IS")) {
                bool is_not = accept_kw("NOT");
                Tree rhs;
                if (accept_kw("NULL")) rhs = Tree("null");
                else if (accept_kw("TRUE")) rhs = Tree("true");
                else if (accept_kw("FALSE")) rhs = Tree("false");
                else fail("expected NULL, TRUE or FALSE after IS");
                node = Tree(is_not ? "is_not" : "is", {std::move(left), std::move(rhs)});
            } else {
                if (negated) fail("dangling NOT");
                return left;
            }
            left = negated ? Tree("not", {std::move(node)}) : std::move(node);
        }
    }

    Tree binary_level(int level) {
        // level 0: |, 1: &, 2: << >>, 3: + -, 4: * / % DIV MOD, 5: ^
        static const std::array<std::vector<std::string_view>, 6> ops = {{
            {"|"}, {"&"}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "%", "DIV", "MOD"}, {"^"},
        }};
        if (level == 6) return unary();
        Tree left = binary_level(level + 1);
        while (true) {
            const Token* t = peek();
            if (!t) break;
            bool hit = false;
            for (auto op : ops[static_cast<std::size_t>(level)]) {
                if ((t->kind == TokenKind::Operator || t->kind == TokenKind::Keyword) && t->text == op) {
                    hit = true;
                    break;
                }
            }
            if (!hit) break;
            std::string op = to_lower(advance().text);
            left = Tree(op, {std::move(left), binary_level(level + 1)});
        }
        return left;
    }

    Tree bit_or() { return binary_level(0); }

    Tree unary() {
        if (is_op("-") || is_op("+") || is_op("~") || is_op("!")) {
            std::string op = advance().text;
            return Tree(op == "!" ? "not" : "unary" + op, {unary()});
        }
        if (accept_kw("BINARY")) return Tree("binary", {unary()});
        Tree p = primary();
        if (accept_kw("COLLATE")) p = Tree("collate", {std::move(p), primary()});
        return p;
    }

    Tree function_call(std::string name) {
        expect_op("(");
        Tree fn("fn:" + to_lower(name));
        if (accept_op(")")) return fn;
        if (accept_kw("DISTINCT")) fn.children.emplace_back("distinct");
        do {
            if (accept_op("*")) {
                fn.children.emplace_back("*");
                continue;
            }
            if (is_kw("SELECT")) {
                fn.children.push_back(Tree("subquery", {query_expression()}));
                continue;
            }
            fn.children.push_back(expression());
            // CAST(x AS type), CONVERT(x USING cs), SUBSTRING(x FROM a FOR b),
            // GROUP_CONCAT(x ORDER BY y SEPARATOR s)
            while (true) {
                if (accept_kw("AS") || accept_kw("USING")) {
                    fn.children.push_back(type_name());
                } else if (accept_kw("FROM") || accept_kw("FOR")) {
                    fn.children.push_back(expression());
                } else if (is_kw("ORDER")) {
                    tail_clauses(fn);
                } else if (is_name_token() && to_lower(peek()->text) == "separator") {
                    advance();
                    fn.children.push_back(primary());
                } else {
                    break;
                }
            }
        } while (accept_op(","));
        expect_op(")");
        return fn;
    }

    Tree type_name() {
        std::string name;
        while (true) {
            const Token* t = peek();
            if (!t || (t->kind != TokenKind::Identifier && t->kind != TokenKind::Keyword) || is_op(")")) break;
            if (t->kind == TokenKind::Keyword && t->text != "BINARY") break;
            if (!name.empty()) name += " ";
            name += to_lower(advance().text);
        }
        if (name.empty()) fail("expected type name");
        Tree type("type:" + name);
        if (accept_op("(")) {
            do {
                type.children.push_back(expression());
            } while (accept_op(","));
            expect_op(")");
        }
        return type;
    }

    Tree primary() {
        const Token* t = peek();
        if (!t) fail("unexpected end of input");
        switch (t->kind) {
            case TokenKind::Number:
            case TokenKind::String:
            case TokenKind::Hex:
            case TokenKind::Variable:
            case TokenKind::SystemVariable: {
                Token tok = advance();
                Tree leaf(token_label(tok));
                // Adjacent string literals concatenate in MySQL.
                while (tok.kind == TokenKind::String && peek() && peek()->kind == TokenKind::String) {
                    leaf.label += advance().text;
                }
                return leaf;
            }
            case TokenKind::Identifier: {
                std::string name = advance().text;
                if (is_op("(")) return function_call(name);
                std::string full = to_lower(name);
                while (accept_op(".")) {
                    if (accept_op("*")) {
                        full += ".*";
                        break;
                    }
                    const Token* part = peek();
                    if (!part || (part->kind != TokenKind::Identifier && part->kind != TokenKind::Keyword))
                        fail("expected name after '.'");
                    full += "." + to_lower(advance().text);
                }
                return Tree("id:" + full);
            }
            case TokenKind::Keyword: {
                if (accept_kw("NULL")) return Tree("null");
                if (accept_kw("TRUE")) return Tree("true");
                if (accept_kw("FALSE")) return Tree("false");
                if (accept_kw("EXISTS")) {
                    expect_op("(");
                    Tree e("exists", {query_expression()});
                    expect_op(")");
                    return e;
                }
                if (accept_kw("CASE")) return case_expr();
                if (accept_kw("INTERVAL")) {
                    Tree amount = expression();
                    const Token* unit = peek();
                    if (!unit || unit->kind != TokenKind::Identifier) fail("expected interval unit");
                    return Tree("interval", {std::move(amount), Tree("unit:" + to_lower(advance().text))});
                }
                // Keywords that double as function names: IF( LEFT( MOD( ...
                if (is_op("(", 1)) {
                    static const std::set<std::string, std::less<>> fn_kw = {"LEFT", "RIGHT", "REPLACE", "INSERT",
                                                                             "MOD", "DATABASE", "CHAR", "BINARY"};
                    if (fn_kw.count(t->text)) return function_call(advance().text);
                }
                fail("unexpected keyword " + t->text);
            }
            case TokenKind::Operator: {
                if (accept_op("(")) {
                    if (is_kw("SELECT")) {
                        Tree sub("subquery", {query_expression()});
                        expect_op(")");
                        return sub;
                    }
                    Tree first = expression();
                    if (accept_op(")")) return first;
                    Tree tuple("tuple", {std::move(first)});
                    while (accept_op(",")) tuple.children.push_back(expression());
                    expect_op(")");
                    return tuple;
                }
                if (accept_op("*")) return Tree("*");
                fail("unexpected '" + t->text + "'");
            }
            case TokenKind::Unknown: fail("unexpected character '" + t->text + "'");
        }
        fail("unexpected token");
    }

    Tree case_expr() {
        Tree node("case");
        if (!is_kw("WHEN")) node.children.push_back(expression());
        while (accept_kw("WHEN")) {
            Tree when("when", {expression()});
            expect_kw("THEN");
            when.children.push_back(expression());
            node.children.push_back(std::move(when));
        }
        if (accept_kw("ELSE")) node.children.push_back(Tree("else", {expression()}));
        expect_kw("END");
        return node;
    }
};

}  // namespace

ParseResult parse_sql(std::string_view sql) {
    ParseResult result;
    LexResult lex = tokenize(sql);
    if (lex.error_pos) {
        result.error_pos = *lex.error_pos;
        result.error = lex.error;
        return result;
    }
    try {
        Parser parser(std::move(lex.tokens), sql.size());
        result.tree = parser.script();
    } catch (const ParseFailure& f) {
        result.error_pos = f.pos;
        result.error = f.message;
    }
    return result;
}

std::string frame_in_template(std::string_view payload) {
    std::string out(kTemplatePrefix);
    out += payload;
    out += kTemplateSuffix;
    return out;
}

ParseResult parse_payload(std::string_view payload) { return parse_sql(frame_in_template(payload)); }

Tree token_tree(std::string_view payload) {
    Tree root("tokens");
    for (const auto& t : tokenize(payload, true).tokens) root.children.emplace_back(token_label(t));
    return root;
}

}  // namespace sqlforge::sql
