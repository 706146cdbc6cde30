#include "ctirag/chunk.hpp"

#include "ctirag/errors.hpp"

#include <cctype>
#include <cstdio>

namespace ctirag {

void CtiDocument::validate() const {
    if (doc_id.empty()) raise(ErrorCode::invalid_params, "document doc_id must be nonempty");
    if (body.empty()) raise(ErrorCode::invalid_params, "document body must be nonempty");
}

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal) {
    char suffix[16];
    std::snprintf(suffix, sizeof(suffix), "#%04zu", ordinal);
    return doc_id + suffix;
}

namespace {
constexpr std::size_t kSnapWindow = 50;

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
} // namespace

std::vector<DocumentChunk> chunk_text(const std::string& doc_id, const std::string& body,
                                      std::size_t max_chunk_chars, std::size_t overlap_chars) {
    if (max_chunk_chars == 0 || overlap_chars >= max_chunk_chars)
        raise(ErrorCode::invalid_params,
              "require 0 <= overlap_chars < max_chunk_chars, got overlap=" +
                  std::to_string(overlap_chars) + " max=" + std::to_string(max_chunk_chars));

    std::vector<DocumentChunk> chunks;
    const std::size_t len = body.size();
    if (len == 0) return chunks;

    std::size_t start = 0;
    std::size_t ordinal = 0;
    for (;;) {
        std::size_t end = start + max_chunk_chars;
        if (end >= len) {
            end = len;
        } else {
            // snap backward to whitespace, but never into the overlap region
            std::size_t low = end > kSnapWindow ? end - kSnapWindow : 0;
            std::size_t floor_pos = start + overlap_chars; // new end must exceed this
            if (low < floor_pos) low = floor_pos;
            for (std::size_t p = end; p-- > low;) {
                if (is_ws(body[p])) {
                    end = p + 1;
                    break;
                }
            }
        }

        DocumentChunk chunk;
        chunk.chunk_id = make_chunk_id(doc_id, ordinal);
        chunk.doc_id = doc_id;
        chunk.ordinal = ordinal;
        chunk.text = body.substr(start, end - start);
        chunk.char_range = {start, end};
        chunks.push_back(std::move(chunk));
        ++ordinal;

        if (end == len) break;
        start = end - overlap_chars;
    }
    return chunks;
}

} // namespace ctirag
