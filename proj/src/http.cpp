#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "http.hpp"
#include "sqlforge/error.hpp"

namespace sqlforge::detail {

ParsedUrl parse_url(std::string_view url_view) {
    const std::string url(url_view);
    auto bad = [&] { return Error(ErrorKind::ConfigError, "bad URL: " + url); };
    ParsedUrl out;
    const auto sep = url.find("://");
    if (sep == std::string::npos) throw bad();
    out.scheme = url.substr(0, sep);
    const std::string rest = url.substr(sep + 3);
    const auto slash = rest.find('/');
    const std::string authority = rest.substr(0, slash);
    out.target = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        out.host = authority.substr(0, colon);
        try {
            out.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw bad();
        }
    } else {
        out.host = authority;
        out.port = out.scheme == "https" ? 443 : 80;
    }
    if (out.host.empty() || (out.scheme != "http" && out.scheme != "https")) throw bad();
    return out;
}

HttpResponse http_send(const HttpRequest& request) {
    ParsedUrl url = parse_url(request.url);
    httplib::Client client(url.scheme + "://" + url.host + ":" + std::to_string(url.port));
    const auto sec = request.timeout_ms / 1000;
    const auto usec = (request.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    httplib::Result result = request.method == "POST"
        ? client.Post(url.target, headers, request.body, request.content_type)
        : client.Get(url.target, headers);

    HttpResponse out;
    if (!result) {
        out.error = httplib::to_string(result.error());
        return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
}

}  // namespace sqlforge::detail
