#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace ctirag {

// A CTI source document with pre-extracted plain-text body.
struct CtiDocument {
    std::string doc_id;
    std::string title;
    std::optional<int> year;
    std::string body;
    std::string source_uri;

    void validate() const; // throws Error(invalid_params)
};

struct CharRange {
    std::size_t begin = 0;
    std::size_t end = 0; // half-open
};

struct DocumentChunk {
    std::string chunk_id; // "<doc_id>#<4-digit ordinal>"
    std::string doc_id;
    std::size_t ordinal = 0;
    std::string text;
    CharRange char_range;
};

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal);

// Sliding-window chunking. Windows advance by (max_chunk_chars -
// overlap_chars); window ends are snapped backward to the nearest
// whitespace within 50 chars when one exists (never past the overlap
// boundary, so the advance stays positive). Consecutive chunks overlap by
// exactly overlap_chars; the union of ranges covers the body exactly.
//
// Throws Error(invalid_params) unless 0 <= overlap_chars < max_chunk_chars.
std::vector<DocumentChunk> chunk_text(const std::string& doc_id, const std::string& body,
                                      std::size_t max_chunk_chars, std::size_t overlap_chars);

} // namespace ctirag
