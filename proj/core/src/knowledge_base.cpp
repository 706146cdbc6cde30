#include "ctirag/knowledge_base.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace ctirag {

using nlohmann::json;

namespace {
constexpr const char* kMagic = "CTIRAG-KB";
}

KnowledgeBase::KnowledgeBase(EmbedderFn embedder, KbOptions options)
    : embedder_(std::move(embedder)), options_(std::move(options)) {
    if (!embedder_) raise(ErrorCode::invalid_params, "knowledge base requires an embedder");
    if (options_.dim == 0) raise(ErrorCode::invalid_params, "kb.dim must be positive");
}

EmbeddingVector KnowledgeBase::embed_or_raise(const std::string& text) const {
    EmbeddingVector v;
    try {
        v = embedder_(text);
    } catch (const Error& e) {
        raise(ErrorCode::embedding_failure, e.what());
    } catch (const std::exception& e) {
        raise(ErrorCode::embedding_failure, e.what());
    }
    if (v.dim() != options_.dim)
        raise(ErrorCode::dimension_mismatch,
              "embedder produced dim " + std::to_string(v.dim()) + ", store expects " +
                  std::to_string(options_.dim));
    if (v.is_zero()) raise(ErrorCode::embedding_failure, "embedder produced a zero vector");
    return v;
}

std::size_t KnowledgeBase::ingest(const CtiDocument& doc) {
    doc.validate();
    std::vector<DocumentChunk> chunks =
        chunk_text(doc.doc_id, doc.body, options_.max_chunk_chars, options_.overlap_chars);

    // embed everything before touching the store: all-or-nothing
    std::vector<Entry> staged;
    staged.reserve(chunks.size());
    for (DocumentChunk& chunk : chunks) {
        Entry entry;
        entry.vec = l2_normalized(embed_or_raise(chunk.text));
        entry.chunk = std::move(chunk);
        staged.push_back(std::move(entry));
    }

    std::unique_lock lock(*mutex_);
    entries_.erase(std::remove_if(entries_.begin(), entries_.end(),
                                  [&](const Entry& e) { return e.chunk.doc_id == doc.doc_id; }),
                   entries_.end());
    for (Entry& e : staged) entries_.push_back(std::move(e));
    docs_[doc.doc_id] = DocMeta{doc.title, doc.year, doc.source_uri};
    return staged.size();
}

std::vector<RetrievalResult> KnowledgeBase::search(const std::string& query_text,
                                                   std::size_t k) const {
    if (k < 1) raise(ErrorCode::invalid_params, "k must be >= 1");
    EmbeddingVector query = embed_or_raise(query_text);

    std::shared_lock lock(*mutex_);
    if (entries_.empty()) raise(ErrorCode::empty_store, "knowledge base has no chunks");

    std::vector<RetrievalResult> scored;
    scored.reserve(entries_.size());
    for (const Entry& e : entries_) {
        RetrievalResult r;
        r.chunk = e.chunk;
        r.score = cosine_similarity(query, e.vec);
        scored.push_back(std::move(r));
    }
    std::sort(scored.begin(), scored.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk.chunk_id < b.chunk.chunk_id;
    });
    if (scored.size() > k) scored.resize(k);
    for (std::size_t i = 0; i < scored.size(); ++i) scored[i].rank = static_cast<int>(i) + 1;
    return scored;
}

std::size_t KnowledgeBase::size() const {
    std::shared_lock lock(*mutex_);
    return entries_.size();
}

std::size_t KnowledgeBase::document_count() const {
    std::shared_lock lock(*mutex_);
    return docs_.size();
}

std::optional<DocMeta> KnowledgeBase::document_meta(const std::string& doc_id) const {
    std::shared_lock lock(*mutex_);
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) return std::nullopt;
    return it->second;
}

void KnowledgeBase::persist(const std::string& path) const {
    std::shared_lock lock(*mutex_);
    std::ostringstream out;
    out << kMagic << ' ' << kFormatVersion << '\n';

    json header;
    header["dim"] = options_.dim;
    header["chunks"] = entries_.size();
    header["embedder"] = options_.embedder_name;
    json docs = json::object();
    for (const auto& [doc_id, meta] : docs_) {
        json d;
        d["title"] = meta.title;
        if (meta.year) d["year"] = *meta.year;
        d["source_uri"] = meta.source_uri;
        docs[doc_id] = d;
    }
    header["docs"] = docs;
    out << header.dump() << '\n';

    for (const Entry& e : entries_) {
        json line;
        line["chunk_id"] = e.chunk.chunk_id;
        line["doc_id"] = e.chunk.doc_id;
        line["ordinal"] = e.chunk.ordinal;
        line["text"] = e.chunk.text;
        line["range"] = json::array({e.chunk.char_range.begin, e.chunk.char_range.end});
        line["vec"] = e.vec.values;
        out << line.dump() << '\n';
    }

    std::string body = out.str();
    std::string full = body + "checksum " + fnv1a64_hex(body) + "\n";
    write_file(path, full);
}

KnowledgeBase KnowledgeBase::load(const std::string& path, EmbedderFn embedder,
                                  const KbOptions& expected) {
    std::string content = read_file(path);

    // split off the trailing checksum line first
    std::size_t last_nl = content.rfind('\n');
    if (last_nl == std::string::npos || last_nl == 0)
        raise(ErrorCode::corrupt_store, path + ": missing checksum line");
    std::size_t prev_nl = content.rfind('\n', last_nl - 1);
    if (prev_nl == std::string::npos)
        raise(ErrorCode::corrupt_store, path + ": missing checksum line");
    std::string checksum_line = content.substr(prev_nl + 1, last_nl - prev_nl - 1);
    std::string body = content.substr(0, prev_nl + 1);
    if (!starts_with(checksum_line, "checksum "))
        raise(ErrorCode::corrupt_store, path + ": missing checksum line");
    if (checksum_line.substr(9) != fnv1a64_hex(body))
        raise(ErrorCode::corrupt_store, path + ": checksum mismatch");

    std::istringstream in(body);
    std::string magic_line;
    if (!std::getline(in, magic_line))
        raise(ErrorCode::corrupt_store, path + ": empty store file");
    std::istringstream magic(magic_line);
    std::string tag;
    int version = -1;
    magic >> tag >> version;
    if (tag != kMagic) raise(ErrorCode::corrupt_store, path + ": bad magic");
    if (version != kFormatVersion)
        raise(ErrorCode::version_mismatch,
              path + ": store format version " + std::to_string(version) + ", reader supports " +
                  std::to_string(kFormatVersion));

    std::string header_line;
    if (!std::getline(in, header_line))
        raise(ErrorCode::corrupt_store, path + ": missing header");
    json header = json::parse(header_line, nullptr, false);
    if (header.is_discarded() || !header.contains("dim") || !header.contains("chunks"))
        raise(ErrorCode::corrupt_store, path + ": malformed header");

    KbOptions options = expected;
    options.dim = header["dim"].get<std::size_t>();
    if (header.contains("embedder")) {
        std::string stored = header["embedder"].get<std::string>();
        if (!expected.embedder_name.empty() && stored != expected.embedder_name)
            log_warn("store was embedded with '" + stored + "', configured embedder is '" +
                     expected.embedder_name + "'; re-ingest for consistent scores");
        options.embedder_name = stored;
    }

    KnowledgeBase kb(std::move(embedder), options);
    if (header.contains("docs"))
        for (auto& [doc_id, d] : header["docs"].items()) {
            DocMeta meta;
            meta.title = d.value("title", "");
            if (d.contains("year")) meta.year = d["year"].get<int>();
            meta.source_uri = d.value("source_uri", "");
            kb.docs_[doc_id] = meta;
        }

    std::size_t expected_chunks = header["chunks"].get<std::size_t>();
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) raise(ErrorCode::corrupt_store, path + ": malformed chunk line");
        Entry e;
        try {
            e.chunk.chunk_id = j.at("chunk_id").get<std::string>();
            e.chunk.doc_id = j.at("doc_id").get<std::string>();
            e.chunk.ordinal = j.at("ordinal").get<std::size_t>();
            e.chunk.text = j.at("text").get<std::string>();
            e.chunk.char_range = {j.at("range")[0].get<std::size_t>(),
                                  j.at("range")[1].get<std::size_t>()};
            e.vec.values = j.at("vec").get<std::vector<double>>();
        } catch (const json::exception& ex) {
            raise(ErrorCode::corrupt_store, path + ": chunk line: " + ex.what());
        }
        if (e.vec.dim() != options.dim)
            raise(ErrorCode::corrupt_store, path + ": stored vector dim mismatch");
        kb.entries_.push_back(std::move(e));
    }
    if (kb.entries_.size() != expected_chunks)
        raise(ErrorCode::corrupt_store,
              path + ": header declares " + std::to_string(expected_chunks) + " chunks, found " +
                  std::to_string(kb.entries_.size()));
    return kb;
}

} // namespace ctirag
