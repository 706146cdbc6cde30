#pragma once

#include "ctirag/alert.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctirag {

enum class IocKind { ipv4, ipv6, domain, url, md5, sha1, sha256 };

const char* ioc_kind_name(IocKind kind);
bool ioc_kind_from_name(std::string_view name, IocKind& out);

// Half-open character range into the refanged source text.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct Ioc {
    IocKind kind = IocKind::ipv4;
    std::string value; // normalized: refanged, lowercased where case-insensitive
    Span span;

    std::string key() const { return std::string(ioc_kind_name(kind)) + ":" + value; }
};

// Reverses common defanging conventions with a fixed substitution table:
//   "hxxp" -> "http"   (covers hxxps -> https)
//   "[.]"  -> "."
//   "(.)"  -> "."
//   "[:]"  -> ":"
// Applied to fixpoint, so the result is stable under re-application.
// Unknown defang styles pass through unchanged.
std::string refang(std::string_view text);

// True iff candidate conforms to the kind's grammar. Total, no trimming:
// the caller passes the exact candidate substring.
bool validate(IocKind kind, std::string_view candidate);

// Extracts every maximal matching substring from refang(alert.raw_text),
// deduplicated by (kind, value) in first-occurrence order. A URL suppresses
// the separate domain entry for its own host unless that host also occurs
// outside a URL host position.
std::vector<Ioc> extract_iocs(const Alert& alert);

// Same extraction over text that has already been refanged. Spans index
// into this exact string.
std::vector<Ioc> extract_iocs_from_text(std::string_view refanged_text);

// RFC1918/loopback/link-local/documentation/multicast etc. for ipv4, plus
// the common ipv6 equivalents. Used by the intel client to decide whether
// an address may be sent to a live platform.
bool is_private_or_reserved(const Ioc& ioc);

// Host portion of a url-kind value (authority minus userinfo/port/brackets),
// lowercased. Empty if the value has no authority.
std::string url_host(std::string_view url_value);

} // namespace ctirag
