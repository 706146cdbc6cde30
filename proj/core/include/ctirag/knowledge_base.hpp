#pragma once

#include "ctirag/chunk.hpp"
#include "ctirag/embedding.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace ctirag {

struct RetrievalResult {
    DocumentChunk chunk;
    double score = 0.0; // cosine similarity
    int rank = 0;       // 1-based
};

struct DocMeta {
    std::string title;
    std::optional<int> year;
    std::string source_uri;
};

using EmbedderFn = std::function<EmbeddingVector(const std::string&)>;

struct KbOptions {
    std::size_t dim = 256;
    std::size_t max_chunk_chars = 1600;
    std::size_t overlap_chars = 200;
    std::string embedder_name = "mock";
};

// Flat (exhaustive-scan) vector store over document chunks. Vectors are
// L2-normalized at ingest; queries are normalized at search time. Exact
// scoring keeps results oracle-checkable; desk-scale corpora do not need
// approximate indexing.
class KnowledgeBase {
public:
    KnowledgeBase(EmbedderFn embedder, KbOptions options);

    // Chunks, embeds and stores the document atomically; re-ingesting a
    // doc_id replaces its previous chunks. Returns the chunk count.
    // Throws InvalidParams (empty body), EmbeddingFailure (no partial
    // state remains), StoreIo.
    std::size_t ingest(const CtiDocument& doc);

    // Top-k by cosine similarity over every stored chunk; ties broken by
    // chunk_id ascending. Throws InvalidParams (k < 1), EmptyStore,
    // EmbeddingFailure.
    std::vector<RetrievalResult> search(const std::string& query_text, std::size_t k) const;

    std::size_t size() const;           // stored chunk count
    std::size_t document_count() const;
    const KbOptions& options() const { return options_; }
    std::optional<DocMeta> document_meta(const std::string& doc_id) const;

    // Versioned, checksummed container; load(persist(s)) preserves search
    // behavior exactly. Throws VersionMismatch, CorruptStore, StoreIo.
    void persist(const std::string& path) const;
    static KnowledgeBase load(const std::string& path, EmbedderFn embedder,
                              const KbOptions& expected);

    static constexpr int kFormatVersion = 1;

private:
    struct Entry {
        DocumentChunk chunk;
        EmbeddingVector vec; // unit norm
    };

    EmbeddingVector embed_or_raise(const std::string& text) const;

    EmbedderFn embedder_;
    KbOptions options_;
    std::vector<Entry> entries_;
    std::map<std::string, DocMeta> docs_;
    // behind a pointer so the store stays movable
    std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

} // namespace ctirag
