#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge {

using Vector = std::vector<float>;

/// Cosine similarity computed in double. Zero vectors give 0.
double cosine(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    /// Unit-norm embedding. Throws EmptyInput on empty text, ProviderError
    /// when a remote backend cannot be reached.
    virtual Vector embed(std::string_view text) const = 0;
    virtual std::string id() const = 0;
};

/// Offline embedder: counts character 3-grams (code points) hashed into
/// 256 buckets with FNV-1a, then L2-normalizes. Texts shorter than three
/// characters are hashed whole as a single gram.
class HashedTrigramEmbedder final : public Embedder {
public:
    static constexpr std::size_t kDimension = 256;

    std::size_t dimension() const override { return kDimension; }
    Vector embed(std::string_view text) const override;
    std::string id() const override { return "hashed-trigram-256"; }

    static std::size_t bucket_of(std::u32string_view gram);
};

/// OpenAI-compatible `/embeddings` endpoint (sentence-transformer servers
/// usually expose the same shape). Vectors are re-normalized on receipt.
class HttpEmbedder final : public Embedder {
public:
    struct Config {
        std::string endpoint;  // full URL of the embeddings route
        std::string model;
        std::string auth_env;  // env var holding the bearer token; may be empty
        std::size_t dimension = 384;
        int timeout_ms = 60000;
    };

    explicit HttpEmbedder(Config config) : config_(std::move(config)) {}

    std::size_t dimension() const override { return config_.dimension; }
    Vector embed(std::string_view text) const override;
    std::string id() const override { return "http:" + config_.model; }

private:
    Config config_;
};

/// Memoizes another embedder. Thread-safe.
class CachingEmbedder final : public Embedder {
public:
    explicit CachingEmbedder(std::shared_ptr<const Embedder> inner) : inner_(std::move(inner)) {}

    std::size_t dimension() const override { return inner_->dimension(); }
    Vector embed(std::string_view text) const override;
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<const Embedder> inner_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, Vector, std::less<>> cache_;
};

}  // namespace sqlforge
