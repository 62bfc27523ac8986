#pragma once
// Offline knowledge base (chunk -> embed -> index) and online MMR retrieval.

#include "sqlforge/embedding.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sqlforge::knowledge {

struct Chunk {
    std::size_t id = 0;
    std::string text;
    std::string source_doc;
    std::size_t offset = 0;  // code-point index into the source document

    bool operator==(const Chunk&) const = default;
};

struct EmbeddedChunk {
    Chunk chunk;
    Vector vector;
};

inline constexpr std::size_t kDefaultChunkSize = 200;
inline constexpr std::size_t kDefaultChunkOverlap = 50;

/// Fixed-stride windows of `size` characters starting every size-overlap
/// characters. A non-final window is cut at its last newline when that
/// newline still lies at or after the next window's start; otherwise it is
/// a hard cut. Chunking stops at the first window that reaches the end.
std::vector<Chunk> chunk_document(std::string_view text, std::size_t size = kDefaultChunkSize,
                                  std::size_t overlap = kDefaultChunkOverlap,
                                  std::string_view source_doc = "", std::size_t first_id = 0);

class VectorIndex {
public:
    VectorIndex() = default;
    /// Validates dimension agreement and unit norms (1e-6).
    VectorIndex(std::vector<EmbeddedChunk> entries, std::size_t dimension);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t dimension() const noexcept { return dimension_; }
    const std::vector<EmbeddedChunk>& entries() const noexcept { return entries_; }

    /// Line-oriented text form; floats carry 9 significant digits so the
    /// round trip is bit-exact.
    std::string serialize() const;
    static VectorIndex parse(std::string_view text);

    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

private:
    std::vector<EmbeddedChunk> entries_;
    std::size_t dimension_ = 0;
};

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder);

struct RetrievalParams {
    std::size_t k = 3;
    double lambda = 0.5;
};

/// Greedy maximum marginal relevance. Returns positions into
/// index.entries() in selection order.
std::vector<std::size_t> mmr_select(const VectorIndex& index, const Vector& query,
                                    const RetrievalParams& params);

std::vector<Chunk> mmr_retrieve(const VectorIndex& index, const Vector& query,
                                const RetrievalParams& params);

/// Chunks every file in order, assigning ids sequentially across files.
std::vector<Chunk> chunk_files(std::span<const std::string> paths,
                               std::size_t size = kDefaultChunkSize,
                               std::size_t overlap = kDefaultChunkOverlap);

}  // namespace sqlforge::knowledge
