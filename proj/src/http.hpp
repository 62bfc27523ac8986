#pragma once
// Thin synchronous HTTP helper over cpp-httplib, private to the library.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sqlforge::detail {

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::string content_type = "application/json";
    int timeout_ms = 10000;
};

struct HttpResponse {
    int status = 0;  // 0 on transport failure
    std::string body;
    std::string error;
};

struct ParsedUrl {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string target;  // path + query
};

ParsedUrl parse_url(std::string_view url);

HttpResponse http_send(const HttpRequest& request);

}  // namespace sqlforge::detail
