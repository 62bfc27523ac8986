#include "sqlforge/embedding.hpp"

#include "http.hpp"
#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>

namespace sqlforge {

double l2_norm(const Vector& v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::DimensionError, "cosine of mismatched vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {
Vector normalized(const std::vector<double>& raw) {
    double norm = 0.0;
    for (double x : raw) norm += x * x;
    norm = std::sqrt(norm);
    Vector out(raw.size(), 0.0f);
    if (norm == 0.0) return out;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i] / norm);
    return out;
}
}  // namespace

std::size_t HashedTrigramEmbedder::bucket_of(std::u32string_view gram) {
    return static_cast<std::size_t>(fnv1a64(utf8_encode(gram)) % kDimension);
}

Vector HashedTrigramEmbedder::embed(std::string_view text) const {
    if (text.empty()) throw Error(ErrorKind::EmptyInput, "embed of empty text");
    const std::u32string cps = utf8_decode(text);
    std::vector<double> counts(kDimension, 0.0);
    if (cps.size() < 3) {
        counts[bucket_of(cps)] += 1.0;
    } else {
        for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
            counts[bucket_of(std::u32string_view(cps).substr(i, 3))] += 1.0;
        }
    }
    return normalized(counts);
}

Vector HttpEmbedder::embed(std::string_view text) const {
    if (text.empty()) throw Error(ErrorKind::EmptyInput, "embed of empty text");
    detail::HttpRequest req;
    req.method = "POST";
    req.url = config_.endpoint;
    req.timeout_ms = config_.timeout_ms;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str())) {
            req.headers.emplace_back("Authorization", std::string("Bearer ") + token);
        }
    }
    req.body = nlohmann::json{{"model", config_.model}, {"input", std::string(text)}}.dump();
    detail::HttpResponse resp = detail::http_send(req);
    if (resp.status != 200) {
        throw Error(ErrorKind::ProviderError,
                    "embedding endpoint " + config_.endpoint + " failed: " +
                        (resp.status ? std::to_string(resp.status) : resp.error));
    }
    try {
        auto j = nlohmann::json::parse(resp.body);
        std::vector<double> raw = j.at("data").at(0).at("embedding").get<std::vector<double>>();
        if (raw.size() != config_.dimension) {
            throw Error(ErrorKind::DimensionError, "embedding dimension " + std::to_string(raw.size()) +
                                                       " != configured " +
                                                       std::to_string(config_.dimension));
        }
        return normalized(raw);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ProviderError, std::string("malformed embedding response: ") + e.what());
    }
}

Vector CachingEmbedder::embed(std::string_view text) const {
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(text); it != cache_.end()) return it->second;
    }
    Vector v = inner_->embed(text);
    std::lock_guard lock(mutex_);
    cache_.emplace(std::string(text), v);
    return v;
}

}  // namespace sqlforge
