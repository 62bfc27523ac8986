// Embedded execution validator. The fixture mirrors a small MySQL
// application schema; MySQL-only syntax is translated before SQLite sees it.

#include "sqlforge/error.hpp"
#include "sqlforge/evaluation.hpp"
#include "sqlforge/sql.hpp"
#include "sqlforge/util.hpp"

#include <sqlite3.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <map>
#include <mutex>
#include <thread>

namespace sqlforge::eval {

namespace {

constexpr const char* kFixtureSql = R"sql(
CREATE TABLE users (id INTEGER PRIMARY KEY, name TEXT NOT NULL, password TEXT, email TEXT, role TEXT);
INSERT INTO users VALUES
 (1,'alice','5f4dcc3b5aa765d61d8327deb882cf99','alice@example.test','admin'),
 (2,'bob','e99a18c428cb38d5f260853678922e03','bob@example.test','user'),
 (3,'carol','d8578edf8458ce06fbc5bb76a58c5ca4','carol@example.test','user'),
 (4,'dave','25d55ad283aa400af464c76d713c07ad','dave@example.test','user'),
 (5,'eve','827ccb0eea8a706c4c34a16891f84e7b','eve@example.test','auditor'),
 (6,'frank','0d107d09f5bbe40cade3de5c71e9e9b7','frank@example.test','user'),
 (7,'grace','482c811da5d5b4bc6d497ffa98491e38','grace@example.test','user'),
 (8,'heidi','96e79218965eb72c92a549dd5a330112','heidi@example.test','user'),
 (9,'ivan','e10adc3949ba59abbe56e057f20f883e','ivan@example.test','support'),
 (10,'judy','fcea920f7412b5da7be0cf42b8c93759','judy@example.test','user');
CREATE TABLE products (id INTEGER PRIMARY KEY, name TEXT, price REAL);
INSERT INTO products VALUES (1,'widget',9.99),(2,'gadget',19.5),(3,'gizmo',4.25);
CREATE TABLE sessions (id INTEGER PRIMARY KEY, user_id INTEGER, token TEXT);
INSERT INTO sessions VALUES (1,1,'tok-a1'),(2,2,'tok-b2');
ATTACH DATABASE ':memory:' AS information_schema;
CREATE TABLE information_schema.tables (table_schema TEXT, table_name TEXT, table_type TEXT);
INSERT INTO information_schema.tables VALUES
 ('appdb','users','BASE TABLE'),('appdb','products','BASE TABLE'),('appdb','sessions','BASE TABLE');
CREATE TABLE information_schema.columns (table_schema TEXT, table_name TEXT, column_name TEXT, ordinal_position INTEGER);
INSERT INTO information_schema.columns VALUES
 ('appdb','users','id',1),('appdb','users','name',2),('appdb','users','password',3),
 ('appdb','users','email',4),('appdb','users','role',5),
 ('appdb','products','id',1),('appdb','products','name',2),('appdb','products','price',3),
 ('appdb','sessions','id',1),('appdb','sessions','user_id',2),('appdb','sessions','token',3);
CREATE TABLE information_schema.schemata (schema_name TEXT);
INSERT INTO information_schema.schemata VALUES ('appdb'),('information_schema'),('mysql');
ATTACH DATABASE ':memory:' AS mysql;
CREATE TABLE mysql.user (user TEXT, host TEXT, authentication_string TEXT);
INSERT INTO mysql.user VALUES ('root','localhost','*81F5E21E35407D884A6CD4A731AEBFB6AF209E1B'),('app','%','*A4B6157319038724E3560894F7F932C8886EBFCF');
)sql";

const std::map<std::string, std::string, std::less<>>& system_variables() {
    static const std::map<std::string, std::string, std::less<>> vars = {
        {"version", "8.0.36"},       {"version_comment", "MySQL Community Server - GPL"},
        {"datadir", "/var/lib/mysql/"}, {"hostname", "db-fixture"},
        {"basedir", "/usr/"},        {"port", "3306"},
        {"tmpdir", "/tmp"},          {"version_compile_os", "Linux"},
        {"server_id", "1"},          {"secure_file_priv", "NULL"},
    };
    return vars;
}

std::string quote_sqlite(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "''";
        else out.push_back(c);
    }
    out += "'";
    return out;
}

bool word_at(std::string_view s, std::size_t i, std::string_view word) {
    if (i + word.size() > s.size()) return false;
    if (!starts_with_ci(s.substr(i), word)) return false;
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (i > 0 && is_word(s[i - 1])) return false;
    if (i + word.size() < s.size() && is_word(s[i + word.size()])) return false;
    return true;
}

}  // namespace

/// MySQL -> SQLite surface translation: comments, string escapes,
/// double-quoted strings, ||/&& operators, DIV, and @@system variables.
// TODO: translate MySQL XOR; SQLite has no logical XOR operator.
std::string translate_mysql(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 16);
    int versioned = 0;
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const char c = s[i];
        if (c == '\'' || c == '"') {
            std::string value;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < n) {
                if (s[j] == '\\' && j + 1 < n) {
                    const char e = s[j + 1];
                    value.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e == 'r' ? '\r' : e == '0' ? '\0' : e);
                    j += 2;
                    continue;
                }
                if (s[j] == c) {
                    if (j + 1 < n && s[j + 1] == c) {
                        value.push_back(c);
                        j += 2;
                        continue;
                    }
                    closed = true;
                    ++j;
                    break;
                }
                value.push_back(s[j++]);
            }
            if (!closed) {
                // Leave the unterminated literal for SQLite to reject.
                out.append(s.substr(i));
                break;
            }
            out += quote_sqlite(value);
            i = j;
            continue;
        }
        if (c == '#') {
            out += "--";
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < n && s[i + 1] == '-') {
            auto nl = s.find('\n', i);
            out.append(s.substr(i, nl == std::string_view::npos ? std::string_view::npos : nl - i));
            i = nl == std::string_view::npos ? n : nl;
            continue;
        }
        if (c == '/' && i + 2 < n && s[i + 1] == '*' && s[i + 2] == '!') {
            i += 3;
            while (i < n && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
            out.push_back(' ');
            ++versioned;
            continue;
        }
        if (c == '/' && i + 1 < n && s[i + 1] == '*') {
            auto end = s.find("*/", i + 2);
            if (end == std::string_view::npos) {
                out.append(s.substr(i));
                break;
            }
            out.append(s.substr(i, end + 2 - i));
            i = end + 2;
            continue;
        }
        if (c == '*' && i + 1 < n && s[i + 1] == '/' && versioned > 0) {
            --versioned;
            out.push_back(' ');
            i += 2;
            continue;
        }
        if (c == '|' && i + 1 < n && s[i + 1] == '|') {
            out += " OR ";
            i += 2;
            continue;
        }
        if (c == '&' && i + 1 < n && s[i + 1] == '&') {
            out += " AND ";
            i += 2;
            continue;
        }
        if (c == '@' && i + 1 < n && s[i + 1] == '@') {
            std::size_t j = i + 2;
            while (j < n && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '.')) ++j;
            std::string name = to_lower(s.substr(i + 2, j - i - 2));
            for (std::string_view scope : {"global.", "session.", "local."}) {
                if (name.rfind(scope, 0) == 0) name = name.substr(scope.size());
            }
            auto it = system_variables().find(name);
            out += it == system_variables().end() ? std::string("NULL") : quote_sqlite(it->second);
            i = j;
            continue;
        }
        if (word_at(s, i, "DIV")) {
            out += "/";
            i += 3;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

struct SqlExecutor::Connection {
    sqlite3* db = nullptr;
    const DbConfig* config = nullptr;
    double simulated_ms = 0.0;
    bool timed_out = false;
    std::chrono::steady_clock::time_point started;

    ~Connection() {
        if (db) sqlite3_close(db);
    }

    // Returns false (and flags the timeout) once the statement budget is spent.
    bool add_delay(double ms) {
        if (config->simulate_delays) {
            simulated_ms += ms;
        } else {
            const double remaining = config->statement_timeout_ms -
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
            const double wait = std::max(0.0, std::min(ms, remaining));
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(wait));
            simulated_ms += wait;
        }
        if (elapsed_ms() >= config->statement_timeout_ms) {
            timed_out = true;
            return false;
        }
        return true;
    }

    double elapsed_ms() const {
        if (config->simulate_delays) return simulated_ms;
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    }
};

struct SqlExecutor::Sync {
    std::mutex mutex;
    std::condition_variable cv;
};

namespace {

using Conn = SqlExecutor;

std::string text_arg(sqlite3_value* v) {
    const unsigned char* t = sqlite3_value_text(v);
    return t ? std::string(reinterpret_cast<const char*>(t), static_cast<std::size_t>(sqlite3_value_bytes(v))) : "";
}

template <class C>
C* conn_of(sqlite3_context* ctx) {
    return static_cast<C*>(sqlite3_user_data(ctx));
}

void set_text(sqlite3_context* ctx, const std::string& s) {
    sqlite3_result_text(ctx, s.c_str(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
}

void fn_constant(sqlite3_context* ctx, int, sqlite3_value**) {
    set_text(ctx, static_cast<const char*>(sqlite3_user_data(ctx)));
}

void fn_concat(sqlite3_context* ctx, int argc, sqlite3_value** argv) {
    std::string out;
    for (int i = 0; i < argc; ++i) {
        if (sqlite3_value_type(argv[i]) == SQLITE_NULL) {
            sqlite3_result_null(ctx);
            return;
        }
        out += text_arg(argv[i]);
    }
    set_text(ctx, out);
}

void fn_concat_ws(sqlite3_context* ctx, int argc, sqlite3_value** argv) {
    if (argc < 1 || sqlite3_value_type(argv[0]) == SQLITE_NULL) {
        sqlite3_result_null(ctx);
        return;
    }
    const std::string sep = text_arg(argv[0]);
    std::string out;
    bool first = true;
    for (int i = 1; i < argc; ++i) {
        if (sqlite3_value_type(argv[i]) == SQLITE_NULL) continue;
        if (!first) out += sep;
        out += text_arg(argv[i]);
        first = false;
    }
    set_text(ctx, out);
}

void fn_if(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const bool cond = sqlite3_value_type(argv[0]) != SQLITE_NULL && sqlite3_value_double(argv[0]) != 0.0;
    sqlite3_result_value(ctx, cond ? argv[1] : argv[2]);
}

void fn_ascii(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const std::string s = text_arg(argv[0]);
    sqlite3_result_int(ctx, s.empty() ? 0 : static_cast<unsigned char>(s[0]));
}

void fn_left(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const std::string s = text_arg(argv[0]);
    const auto len = std::max<sqlite3_int64>(0, sqlite3_value_int64(argv[1]));
    set_text(ctx, s.substr(0, static_cast<std::size_t>(len)));
}

void fn_right(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const std::string s = text_arg(argv[0]);
    const auto len = static_cast<std::size_t>(std::max<sqlite3_int64>(0, sqlite3_value_int64(argv[1])));
    set_text(ctx, len >= s.size() ? s : s.substr(s.size() - len));
}

void fn_mid(sqlite3_context* ctx, int argc, sqlite3_value** argv) {
    const std::string s = text_arg(argv[0]);
    auto pos = sqlite3_value_int64(argv[1]);
    if (pos < 1 || static_cast<std::size_t>(pos) > s.size()) {
        set_text(ctx, "");
        return;
    }
    std::size_t len = argc > 2 ? static_cast<std::size_t>(std::max<sqlite3_int64>(0, sqlite3_value_int64(argv[2])))
                               : std::string::npos;
    set_text(ctx, s.substr(static_cast<std::size_t>(pos - 1), len));
}

void fn_locate(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const std::string needle = text_arg(argv[0]);
    const std::string hay = text_arg(argv[1]);
    auto p = hay.find(needle);
    sqlite3_result_int64(ctx, p == std::string::npos ? 0 : static_cast<sqlite3_int64>(p + 1));
}

void fn_digest(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const auto width = static_cast<std::size_t>(reinterpret_cast<std::uintptr_t>(sqlite3_user_data(ctx)));
    const std::string s = text_arg(argv[0]);
    std::string out;
    std::uint64_t h = fnv1a64(s);
    while (out.size() < width) {
        out += hex64(h);
        h = mix64(h);
    }
    set_text(ctx, out.substr(0, width));
}

void fn_unhex(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const std::string s = text_arg(argv[0]);
    std::string out;
    for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
        out.push_back(static_cast<char>(std::stoi(s.substr(i, 2), nullptr, 16)));
    }
    set_text(ctx, out);
}

void fn_xpath(sqlite3_context* ctx, int, sqlite3_value** argv) {
    // MySQL raises "XPATH syntax error: '<rest>'" for an invalid path; this
    // is the error-based exfiltration channel.
    const std::string path = text_arg(argv[1]);
    if (!path.empty() && (std::isalpha(static_cast<unsigned char>(path[0])) || path[0] == '/' || path[0] == '.')) {
        sqlite3_result_null(ctx);
        return;
    }
    const std::string msg = "XPATH syntax error: '" + path + "'";
    sqlite3_result_error(ctx, msg.c_str(), -1);
}

void fn_null(sqlite3_context* ctx, int, sqlite3_value**) { sqlite3_result_null(ctx); }

void fn_rand(sqlite3_context* ctx, int, sqlite3_value**) { sqlite3_result_double(ctx, 0.4217); }

void fn_floor(sqlite3_context* ctx, int, sqlite3_value** argv) {
    sqlite3_result_int64(ctx, static_cast<sqlite3_int64>(std::floor(sqlite3_value_double(argv[0]))));
}

void fn_exp(sqlite3_context* ctx, int, sqlite3_value** argv) {
    const double r = std::exp(sqlite3_value_double(argv[0]));
    if (!std::isfinite(r)) {
        sqlite3_result_error(ctx, "DOUBLE value is out of range in 'exp'", -1);
        return;
    }
    sqlite3_result_double(ctx, r);
}

}  // namespace

SqlExecutor::SqlExecutor(DbConfig config) : config_(std::move(config)), sync_(std::make_unique<Sync>()) {
    if (config_.backend != "sqlite") {
        throw Error(ErrorKind::InfrastructureError,
                    "database backend '" + config_.backend + "' is not available in this build (use sqlite)");
    }
    if (config_.pool_size == 0) config_.pool_size = 1;

    for (std::size_t k = 0; k < config_.pool_size; ++k) {
        auto conn = std::make_unique<Connection>();
        conn->config = &config_;
        if (sqlite3_open_v2(":memory:", &conn->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                            nullptr) != SQLITE_OK) {
            throw Error(ErrorKind::InfrastructureError, "cannot open fixture database");
        }
        char* err = nullptr;
        if (sqlite3_exec(conn->db, kFixtureSql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err ? err : "unknown";
            sqlite3_free(err);
            throw Error(ErrorKind::InfrastructureError, "fixture load failed: " + msg);
        }

        sqlite3* db = conn->db;
        Connection* raw = conn.get();
        auto reg = [db](const char* name, int argc, void* user,
                        void (*fn)(sqlite3_context*, int, sqlite3_value**)) {
            sqlite3_create_function_v2(db, name, argc, SQLITE_UTF8, user, fn, nullptr, nullptr, nullptr);
        };
        reg("sleep", 1, raw, [](sqlite3_context* ctx, int, sqlite3_value** argv) {
            auto* c = conn_of<Connection>(ctx);
            if (!c->add_delay(sqlite3_value_double(argv[0]) * 1000.0)) {
                sqlite3_result_error(ctx, "statement timeout", -1);
                return;
            }
            sqlite3_result_int(ctx, 0);
        });
        reg("benchmark", 2, raw, [](sqlite3_context* ctx, int, sqlite3_value** argv) {
            auto* c = conn_of<Connection>(ctx);
            if (!c->add_delay(static_cast<double>(sqlite3_value_int64(argv[0])) * 0.0003)) {
                sqlite3_result_error(ctx, "statement timeout", -1);
                return;
            }
            sqlite3_result_int(ctx, 0);
        });
        static const char* kVersion = "8.0.36";
        static const char* kDatabase = "appdb";
        static const char* kUser = "app@localhost";
        static const char* kNow = "2026-01-01 00:00:00";
        reg("version", 0, const_cast<char*>(kVersion), fn_constant);
        for (const char* name : {"database", "schema"}) reg(name, 0, const_cast<char*>(kDatabase), fn_constant);
        for (const char* name : {"user", "current_user", "session_user", "system_user"})
            reg(name, 0, const_cast<char*>(kUser), fn_constant);
        for (const char* name : {"now", "sysdate"}) reg(name, 0, const_cast<char*>(kNow), fn_constant);
        reg("concat", -1, nullptr, fn_concat);
        reg("concat_ws", -1, nullptr, fn_concat_ws);
        reg("if", 3, nullptr, fn_if);
        reg("ascii", 1, nullptr, fn_ascii);
        reg("ord", 1, nullptr, fn_ascii);
        reg("left", 2, nullptr, fn_left);
        reg("right", 2, nullptr, fn_right);
        reg("mid", 3, nullptr, fn_mid);
        reg("mid", 2, nullptr, fn_mid);
        reg("locate", 2, nullptr, fn_locate);
        reg("md5", 1, reinterpret_cast<void*>(std::uintptr_t{32}), fn_digest);
        reg("sha1", 1, reinterpret_cast<void*>(std::uintptr_t{40}), fn_digest);
        reg("unhex", 1, nullptr, fn_unhex);
        reg("extractvalue", 2, nullptr, fn_xpath);
        reg("updatexml", 3, nullptr, fn_xpath);
        reg("load_file", 1, nullptr, fn_null);
        reg("rand", 0, nullptr, fn_rand);
        reg("floor", 1, nullptr, fn_floor);
        reg("exp", 1, nullptr, fn_exp);
        reg("connection_id", 0, const_cast<char*>("1"), fn_constant);

        sqlite3_limit(db, SQLITE_LIMIT_LENGTH, 1 << 20);
        sqlite3_progress_handler(db, 1000, [](void* user) -> int {
            auto* c = static_cast<Connection*>(user);
            if (c->elapsed_ms() >= c->config->statement_timeout_ms ||
                std::chrono::steady_clock::now() - c->started >
                    std::chrono::milliseconds(c->config->statement_timeout_ms)) {
                c->timed_out = true;
                return 1;
            }
            return 0;
        }, raw);
        // Read-only surface: payload SQL may select and call functions, nothing else.
        sqlite3_set_authorizer(db, [](void*, int action, const char*, const char*, const char*, const char*) -> int {
            switch (action) {
                case SQLITE_SELECT:
                case SQLITE_READ:
                case SQLITE_FUNCTION:
                case SQLITE_RECURSIVE: return SQLITE_OK;
                default: return SQLITE_DENY;
            }
        }, nullptr);

        idle_.push_back(conn.get());
        pool_.push_back(std::move(conn));
    }

    ExecutionOutcome base = run(*pool_.front(), sql::frame_in_template(config_.baseline_literal));
    if (base.status != ExecStatus::executed) {
        throw Error(ErrorKind::InfrastructureError, "baseline query failed: " + base.error_message);
    }
    baseline_ = base.row_count;
}

SqlExecutor::~SqlExecutor() = default;

namespace {

std::string classify_error(const std::string& message) {
    auto has = [&](std::string_view needle) { return message.find(needle) != std::string::npos; };
    if (has("no such function")) return "unknown_function";
    if (has("syntax error") || has("unrecognized token") || has("incomplete input")) {
        static const std::vector<std::string_view> dialect = {
            "waitfor", "delay", "exec", "execute", "declare", "xp_cmdshell", "top", "dbms_pipe",
            "utl_inaddr", "::", "pg_sleep", "dual"};
        auto q = message.find("near \"");
        if (q != std::string::npos) {
            auto end = message.find('"', q + 6);
            std::string near = to_lower(message.substr(q + 6, end - q - 6));
            for (auto d : dialect) {
                if (near == d) return "dialect_syntax";
            }
        }
        return "syntax_error";
    }
    if (has("no such column")) return "unknown_column";
    if (has("no such table")) return "unknown_table";
    if (has("ORDER BY term out of range") || has("GROUP BY term out of range")) return "order_by_out_of_range";
    if (has("same number of result columns")) return "column_count_mismatch";
    if (has("not authorized")) return "not_authorized";
    if (has("XPATH syntax error")) return "xpath_error";
    if (has("wrong number of arguments")) return "wrong_arguments";
    if (has("out of range")) return "value_out_of_range";
    if (has("too big")) return "too_big";
    if (has("misuse of aggregate")) return "aggregate_misuse";
    if (has("sub-select returns")) return "subquery_columns";
    return "other";
}

}  // namespace

ExecutionOutcome SqlExecutor::run(Connection& conn, std::string_view sql) {
    ExecutionOutcome out;
    out.baseline_row_count = baseline_;
    conn.simulated_ms = 0.0;
    conn.timed_out = false;
    conn.started = std::chrono::steady_clock::now();

    const std::string translated = translate_mysql(sql);
    sqlite3_stmt* stmt = nullptr;
    const char* tail = nullptr;

    auto finish_elapsed = [&] {
        out.elapsed_ms = static_cast<std::int64_t>(conn.elapsed_ms());
        if (out.status == ExecStatus::timeout) {
            out.elapsed_ms = std::max<std::int64_t>(out.elapsed_ms, config_.statement_timeout_ms);
        }
    };
    auto fail_with = [&](const std::string& msg) {
        out.status = ExecStatus::sql_error;
        out.error_message = msg;
        out.error_class = classify_error(msg);
        finish_elapsed();
        return out;
    };

    if (sqlite3_prepare_v2(conn.db, translated.c_str(), static_cast<int>(translated.size()), &stmt, &tail) !=
        SQLITE_OK) {
        return fail_with(sqlite3_errmsg(conn.db));
    }
    // The vulnerable endpoint runs a single statement, like the MySQL
    // client API without multi-statement support.
    if (tail && *tail) {
        sqlite3_stmt* extra = nullptr;
        const int rc = sqlite3_prepare_v2(conn.db, tail, -1, &extra, nullptr);
        if (rc != SQLITE_OK || extra != nullptr) {
            std::string msg = rc != SQLITE_OK ? sqlite3_errmsg(conn.db) : "multiple statements";
            sqlite3_finalize(extra);
            sqlite3_finalize(stmt);
            if (rc == SQLITE_OK) {
                out.status = ExecStatus::sql_error;
                out.error_message = msg;
                out.error_class = "stacked_query";
                finish_elapsed();
                return out;
            }
            return fail_with(msg);
        }
    }
    if (!stmt) return fail_with("empty statement");

    std::int64_t rows = 0;
    int rc;
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) ++rows;
    if (rc == SQLITE_DONE) {
        out.status = ExecStatus::executed;
        out.row_count = rows;
    } else if (conn.timed_out || rc == SQLITE_INTERRUPT) {
        out.status = ExecStatus::timeout;
        out.error_class = "timeout";
        out.error_message = "statement exceeded " + std::to_string(config_.statement_timeout_ms) + "ms";
    } else {
        std::string msg = sqlite3_errmsg(conn.db);
        sqlite3_finalize(stmt);
        return fail_with(msg);
    }
    sqlite3_finalize(stmt);
    finish_elapsed();
    return out;
}

ExecutionOutcome SqlExecutor::execute(std::string_view payload) {
    Connection* conn = nullptr;
    {
        std::unique_lock lock(sync_->mutex);
        sync_->cv.wait(lock, [&] { return !idle_.empty(); });
        conn = idle_.back();
        idle_.pop_back();
    }
    ExecutionOutcome out;
    try {
        out = run(*conn, sql::frame_in_template(payload));
    } catch (...) {
        std::lock_guard lock(sync_->mutex);
        idle_.push_back(conn);
        sync_->cv.notify_one();
        throw;
    }
    {
        std::lock_guard lock(sync_->mutex);
        idle_.push_back(conn);
    }
    sync_->cv.notify_one();
    return out;
}

}  // namespace sqlforge::eval
