#include "sqlforge/knowledge.hpp"

#include "sqlforge/error.hpp"
#include "sqlforge/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

namespace sqlforge::knowledge {

std::vector<Chunk> chunk_document(std::string_view text, std::size_t size, std::size_t overlap,
                                  std::string_view source_doc, std::size_t first_id) {
    if (text.empty()) throw Error(ErrorKind::EmptyInput, "chunk_document of empty text");
    if (size <= overlap) throw Error(ErrorKind::InvalidParams, "chunk size must exceed overlap");

    const std::u32string cps = utf8_decode(text);
    const std::size_t n = cps.size();
    const std::size_t stride = size - overlap;

    std::vector<Chunk> chunks;
    std::size_t prev_end = 0;
    for (std::size_t offset = 0; offset < n; offset += stride) {
        std::size_t end = std::min(offset + size, n);
        if (end < n) {
            const std::size_t next_offset = offset + stride;
            // Last newline in the window that keeps coverage and still extends
            // past the previous chunk.
            for (std::size_t p = end; p-- > offset;) {
                if (cps[p] != U'\n') continue;
                if (p >= next_offset && p > prev_end && p > offset) end = p;
                break;
            }
        }
        chunks.push_back(Chunk{first_id + chunks.size(),
                               utf8_encode(std::u32string_view(cps).substr(offset, end - offset)),
                               std::string(source_doc), offset});
        prev_end = end;
        if (end == n) break;
    }
    return chunks;
}

VectorIndex::VectorIndex(std::vector<EmbeddedChunk> entries, std::size_t dimension)
    : entries_(std::move(entries)), dimension_(dimension) {
    for (const auto& e : entries_) {
        if (e.vector.size() != dimension_) {
            throw Error(ErrorKind::DimensionError, "chunk " + std::to_string(e.chunk.id) +
                                                       " has dimension " +
                                                       std::to_string(e.vector.size()));
        }
        if (std::abs(l2_norm(e.vector) - 1.0) > 1e-6) {
            throw Error(ErrorKind::InvalidParams,
                        "chunk " + std::to_string(e.chunk.id) + " vector is not unit norm");
        }
    }
}

namespace {

std::string escape_field(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape_field(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out.push_back(s[i]);
            continue;
        }
        switch (s[++i]) {
            case 't': out.push_back('\t'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            default: out.push_back(s[i]);
        }
    }
    return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

constexpr std::string_view kHeader = "#sqlforge-index v1 dim=";

}  // namespace

std::string VectorIndex::serialize() const {
    std::string out(kHeader);
    out += std::to_string(dimension_);
    out += '\n';
    char buf[32];
    for (const auto& e : entries_) {
        out += std::to_string(e.chunk.id);
        out += '\t';
        out += escape_field(e.chunk.source_doc);
        out += '\t';
        out += std::to_string(e.chunk.offset);
        out += '\t';
        out += escape_field(e.chunk.text);
        out += '\t';
        for (std::size_t i = 0; i < e.vector.size(); ++i) {
            if (i) out += ' ';
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(e.vector[i]));
            out += buf;
        }
        out += '\n';
    }
    return out;
}

VectorIndex VectorIndex::parse(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines.front().rfind(kHeader, 0) != 0) {
        throw Error(ErrorKind::ParseError, "missing index header");
    }
    const std::size_t dim = std::stoul(lines.front().substr(kHeader.size()));
    std::vector<EmbeddedChunk> entries;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        auto fields = split_tabs(lines[ln]);
        if (fields.size() != 5) {
            throw Error(ErrorKind::ParseError, "index line " + std::to_string(ln + 1) + ": expected 5 fields");
        }
        EmbeddedChunk e;
        e.chunk.id = std::stoul(std::string(fields[0]));
        e.chunk.source_doc = unescape_field(fields[1]);
        e.chunk.offset = std::stoul(std::string(fields[2]));
        e.chunk.text = unescape_field(fields[3]);
        std::string_view vec = fields[4];
        e.vector.reserve(dim);
        std::size_t pos = 0;
        while (pos < vec.size()) {
            auto sp = vec.find(' ', pos);
            std::string tok(vec.substr(pos, sp - pos));
            e.vector.push_back(std::strtof(tok.c_str(), nullptr));
            if (sp == std::string_view::npos) break;
            pos = sp + 1;
        }
        entries.push_back(std::move(e));
    }
    return VectorIndex(std::move(entries), dim);
}

void VectorIndex::save(const std::string& path) const { write_file(path, serialize()); }

VectorIndex VectorIndex::load(const std::string& path) { return parse(read_file(path)); }

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder) {
    if (chunks.empty()) throw Error(ErrorKind::EmptyInput, "build_index with no chunks");
    std::vector<EmbeddedChunk> entries;
    entries.reserve(chunks.size());
    for (const auto& c : chunks) entries.push_back(EmbeddedChunk{c, embedder.embed(c.text)});
    return VectorIndex(std::move(entries), embedder.dimension());
}

std::vector<std::size_t> mmr_select(const VectorIndex& index, const Vector& query,
                                    const RetrievalParams& params) {
    if (index.empty()) throw Error(ErrorKind::IndexError, "retrieval from empty index");
    if (query.size() != index.dimension()) {
        throw Error(ErrorKind::DimensionError, "query dimension " + std::to_string(query.size()) +
                                                   " != index dimension " +
                                                   std::to_string(index.dimension()));
    }
    if (params.k < 1 || params.k > index.size()) {
        throw Error(ErrorKind::InvalidParams, "k must be in [1, index size]");
    }
    if (!(params.lambda >= 0.0 && params.lambda <= 1.0)) {
        throw Error(ErrorKind::InvalidParams, "lambda must be in [0, 1]");
    }

    const auto& entries = index.entries();
    const std::size_t n = entries.size();
    std::vector<double> relevance(n);
    for (std::size_t i = 0; i < n; ++i) relevance[i] = cosine(entries[i].vector, query);

    // Running max similarity of each candidate to the selected set.
    std::vector<double> redundancy(n, 0.0);
    std::vector<bool> taken(n, false);
    std::vector<std::size_t> order;
    order.reserve(params.k);

    for (std::size_t step = 0; step < params.k; ++step) {
        std::size_t best = n;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double penalty = order.empty() ? 0.0 : redundancy[i];
            const double score = params.lambda * relevance[i] - (1.0 - params.lambda) * penalty;
            if (best == n || score > best_score ||
                (score == best_score && entries[i].chunk.id < entries[best].chunk.id)) {
                best = i;
                best_score = score;
            }
        }
        taken[best] = true;
        order.push_back(best);
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double sim = cosine(entries[i].vector, entries[best].vector);
            if (order.size() == 1 || sim > redundancy[i]) redundancy[i] = sim;
        }
    }
    return order;
}

std::vector<Chunk> mmr_retrieve(const VectorIndex& index, const Vector& query,
                                const RetrievalParams& params) {
    std::vector<Chunk> out;
    for (std::size_t pos : mmr_select(index, query, params)) out.push_back(index.entries()[pos].chunk);
    return out;
}

std::vector<Chunk> chunk_files(std::span<const std::string> paths, std::size_t size,
                               std::size_t overlap) {
    std::vector<Chunk> all;
    for (const auto& path : paths) {
        const std::string text = read_file(path);
        if (text.empty()) continue;
        auto chunks = chunk_document(text, size, overlap,
                                     std::filesystem::path(path).filename().string(), all.size());
        all.insert(all.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    if (all.empty()) throw Error(ErrorKind::EmptyInput, "knowledge base has no text");
    return all;
}

}  // namespace sqlforge::knowledge
