#include "ctirag/ioc.hpp"

#include "ctirag/errors.hpp"
#include "ctirag/log.hpp"
#include "ctirag/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

namespace ctirag {

namespace {

bool is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

// Final labels accepted by the domain grammar. A compact set of common
// generic/country TLDs plus ones prevalent in CTI reporting; anything else
// (file extensions in particular) is rejected.
const std::set<std::string>& known_tlds() {
    static const std::set<std::string> tlds = {
        "com", "net", "org", "edu", "gov", "mil", "int", "io", "co", "info",
        "biz", "xyz", "top", "online", "site", "club", "shop", "app", "dev",
        "cloud", "me", "tv", "us", "ai", "ru", "cn", "uk", "de", "fr", "eu",
        "nl", "se", "no", "fi", "it", "es", "pl", "br", "in", "jp", "kr",
        "au", "ca", "ch", "at", "be", "dk", "cz", "tk", "pw", "cc", "ws",
        "su", "onion",
    };
    return tlds;
}

bool valid_ipv4(std::string_view s) {
    int octets = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i])) return false;
        std::size_t start = i;
        int value = 0;
        while (i < s.size() && is_digit(s[i])) {
            value = value * 10 + (s[i] - '0');
            ++i;
            if (i - start > 3) return false;
        }
        // leading zeros allowed ("010"), but value must fit an octet
        if (value > 255) return false;
        ++octets;
        if (octets > 4) return false;
        if (i < s.size()) {
            if (s[i] != '.') return false;
            ++i;
            if (i == s.size()) return false; // trailing dot
        }
    }
    return octets == 4;
}

bool valid_ipv6(std::string_view s) {
    if (s.size() < 2) return false;
    // at most one "::"
    std::size_t dc = s.find("::");
    bool has_dc = dc != std::string_view::npos;
    if (has_dc && s.find("::", dc + 1) != std::string_view::npos) return false;

    auto count_groups = [](std::string_view part) -> int {
        if (part.empty()) return 0;
        int groups = 0;
        std::size_t i = 0;
        while (i <= part.size()) {
            std::size_t next = part.find(':', i);
            std::string_view g = part.substr(i, (next == std::string_view::npos ? part.size() : next) - i);
            if (g.empty() || g.size() > 4 || !is_hex_string(g)) return -1;
            ++groups;
            if (next == std::string_view::npos) break;
            i = next + 1;
            if (i > part.size()) return -1;
        }
        return groups;
    };

    if (has_dc) {
        int left = count_groups(s.substr(0, dc));
        int right = count_groups(s.substr(dc + 2));
        if (left < 0 || right < 0) return false;
        return left + right <= 7; // "::" stands in for at least one group
    }
    int groups = count_groups(s);
    return groups == 8;
}

bool valid_domain(std::string_view s) {
    if (s.empty() || s.size() > 253) return false;
    std::string lower = to_lower(s);
    std::vector<std::string> labels = split(lower, '.');
    if (labels.size() < 2) return false;
    for (const std::string& label : labels) {
        if (label.empty() || label.size() > 63) return false;
        if (label.front() == '-' || label.back() == '-') return false;
        for (char c : label)
            if (!is_alnum(c) && c != '-') return false;
    }
    const std::string& tld = labels.back();
    if (tld.size() < 2) return false;
    for (char c : tld)
        if (!is_alpha(c)) return false;
    return known_tlds().count(tld) > 0;
}

bool valid_scheme(std::string_view s) {
    if (s.empty() || !is_alpha(s[0])) return false;
    for (char c : s)
        if (!is_alnum(c) && c != '+' && c != '.' && c != '-') return false;
    return true;
}

bool valid_url(std::string_view s) {
    std::size_t sep = s.find("://");
    if (sep == std::string_view::npos || sep == 0) return false;
    if (!valid_scheme(s.substr(0, sep))) return false;
    std::string_view rest = s.substr(sep + 3);
    if (rest.empty()) return false;
    for (char c : rest)
        if (std::isspace(static_cast<unsigned char>(c))) return false;
    return true;
}

bool valid_hash(std::string_view s, std::size_t len) {
    return s.size() == len && is_hex_string(s);
}

struct Match {
    Ioc ioc;
    // for url matches: span of the authority host within the source text
    Span host_span;
    std::string host;
};

bool url_char(char c) {
    if (is_alnum(c)) return true;
    constexpr std::string_view allowed = "-._~:/?#[]@!$&'()*+,;=%";
    return allowed.find(c) != std::string_view::npos;
}

// Balanced-aware trim of trailing punctuation that is almost always prose,
// not part of the indicator.
std::size_t trim_url_end(std::string_view text, std::size_t begin, std::size_t end) {
    while (end > begin) {
        char c = text[end - 1];
        if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
            c == '\'' || c == '"' || c == '>') {
            --end;
            continue;
        }
        if (c == ')' || c == ']') {
            char open = (c == ')') ? '(' : '[';
            std::string_view body = text.substr(begin, end - begin);
            auto opens = std::count(body.begin(), body.end(), open);
            auto closes = std::count(body.begin(), body.end(), c);
            if (closes > opens) {
                --end;
                continue;
            }
        }
        break;
    }
    return end;
}

void scan_urls(std::string_view text, std::vector<Match>& out) {
    std::size_t pos = 0;
    while ((pos = text.find("://", pos)) != std::string_view::npos) {
        // expand the scheme backwards
        std::size_t begin = pos;
        while (begin > 0 && (is_alnum(text[begin - 1]) || text[begin - 1] == '+' ||
                             text[begin - 1] == '.' || text[begin - 1] == '-'))
            --begin;
        while (begin < pos && !is_alpha(text[begin]))
            ++begin; // scheme starts with a letter
        if (begin == pos) {
            pos += 3;
            continue;
        }
        std::size_t end = pos + 3;
        while (end < text.size() && url_char(text[end])) ++end;
        end = trim_url_end(text, begin, end);
        std::string_view candidate = text.substr(begin, end - begin);
        if (!valid_url(candidate)) {
            pos += 3;
            continue;
        }

        // authority = after "://" up to '/', '?' or '#'
        std::size_t auth_begin = begin + (pos - begin) + 3;
        std::size_t auth_end = auth_begin;
        while (auth_end < end && text[auth_end] != '/' && text[auth_end] != '?' &&
               text[auth_end] != '#')
            ++auth_end;
        std::size_t host_begin = auth_begin, host_end = auth_end;
        std::string_view auth = text.substr(auth_begin, auth_end - auth_begin);
        std::size_t at = auth.rfind('@');
        if (at != std::string_view::npos) host_begin = auth_begin + at + 1;
        if (host_begin < host_end && text[host_begin] == '[') {
            std::size_t close = text.find(']', host_begin);
            if (close != std::string_view::npos && close < host_end) {
                host_end = close + 1;
            }
        } else {
            std::size_t colon = text.substr(host_begin, host_end - host_begin).rfind(':');
            if (colon != std::string_view::npos) host_end = host_begin + colon;
        }

        // normalize: scheme and host lowercased, rest verbatim
        std::string value;
        value.reserve(candidate.size());
        for (std::size_t i = begin; i < end; ++i) {
            char c = text[i];
            if (i < pos || (i >= host_begin && i < host_end))
                c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            value.push_back(c);
        }

        Match m;
        m.ioc.kind = IocKind::url;
        m.ioc.value = std::move(value);
        m.ioc.span = {begin, end};
        std::string host(text.substr(host_begin, host_end - host_begin));
        if (!host.empty() && host.front() == '[' && host.back() == ']')
            host = host.substr(1, host.size() - 2);
        m.host = to_lower(host);
        m.host_span = {host_begin, host_end};
        out.push_back(std::move(m));
        pos = end;
    }
}

void scan_hex_runs(std::string_view text, std::vector<Match>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_hex_digit(text[i])) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && is_hex_digit(text[i])) ++i;
        std::size_t len = i - begin;
        IocKind kind;
        if (len == 32) kind = IocKind::md5;
        else if (len == 40) kind = IocKind::sha1;
        else if (len == 64) kind = IocKind::sha256;
        else continue;
        Match m;
        m.ioc.kind = kind;
        m.ioc.value = to_lower(text.substr(begin, len));
        m.ioc.span = {begin, begin + len};
        out.push_back(std::move(m));
    }
}

void scan_ipv4(std::string_view text, std::vector<Match>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_digit(text[i]) && text[i] != '.') {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && (is_digit(text[i]) || text[i] == '.')) ++i;
        // trim dots that belong to surrounding prose
        std::size_t b = begin, e = i;
        while (b < e && text[b] == '.') ++b;
        while (e > b && text[e - 1] == '.') --e;
        std::string_view candidate = text.substr(b, e - b);
        if (!valid_ipv4(candidate)) continue;
        Match m;
        m.ioc.kind = IocKind::ipv4;
        m.ioc.value = std::string(candidate);
        m.ioc.span = {b, e};
        out.push_back(std::move(m));
    }
}

void scan_ipv6(std::string_view text, std::vector<Match>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (!is_hex_digit(c) && c != ':') {
            ++i;
            continue;
        }
        std::size_t begin = i;
        bool has_colon = false;
        while (i < text.size() && (is_hex_digit(text[i]) || text[i] == ':')) {
            if (text[i] == ':') has_colon = true;
            ++i;
        }
        if (!has_colon) continue;
        std::size_t b = begin, e = i;
        // single leading/trailing colons are usually prose ("src:2001:db8::1"),
        // but "::" is structural and stays
        if (e - b >= 2 && text[b] == ':' && text[b + 1] != ':') ++b;
        if (e - b >= 2 && text[e - 1] == ':' && text[e - 2] != ':') --e;
        std::string_view candidate = text.substr(b, e - b);
        if (!valid_ipv6(candidate)) continue;
        Match m;
        m.ioc.kind = IocKind::ipv6;
        m.ioc.value = to_lower(candidate);
        m.ioc.span = {b, e};
        out.push_back(std::move(m));
    }
}

void scan_domains(std::string_view text, std::vector<Match>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (!is_alnum(c) && c != '.' && c != '-') {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < text.size() && (is_alnum(text[i]) || text[i] == '.' || text[i] == '-')) ++i;
        std::size_t b = begin, e = i;
        while (b < e && (text[b] == '.' || text[b] == '-')) ++b;
        while (e > b && (text[e - 1] == '.' || text[e - 1] == '-')) --e;
        std::string_view candidate = text.substr(b, e - b);
        if (candidate.empty() || !valid_domain(candidate)) continue;
        Match m;
        m.ioc.kind = IocKind::domain;
        m.ioc.value = to_lower(candidate);
        m.ioc.span = {b, e};
        out.push_back(std::move(m));
    }
}

bool span_within(const Span& inner, const Span& outer) {
    return inner.begin >= outer.begin && inner.end <= outer.end;
}

} // namespace

const char* ioc_kind_name(IocKind kind) {
    switch (kind) {
    case IocKind::ipv4: return "ipv4";
    case IocKind::ipv6: return "ipv6";
    case IocKind::domain: return "domain";
    case IocKind::url: return "url";
    case IocKind::md5: return "md5";
    case IocKind::sha1: return "sha1";
    case IocKind::sha256: return "sha256";
    }
    return "ipv4";
}

bool ioc_kind_from_name(std::string_view name, IocKind& out) {
    static const std::map<std::string_view, IocKind> names = {
        {"ipv4", IocKind::ipv4},     {"ipv6", IocKind::ipv6},
        {"domain", IocKind::domain}, {"url", IocKind::url},
        {"md5", IocKind::md5},       {"sha1", IocKind::sha1},
        {"sha256", IocKind::sha256},
    };
    auto it = names.find(name);
    if (it == names.end()) return false;
    out = it->second;
    return true;
}

std::string refang(std::string_view text) {
    static const std::array<std::pair<std::string_view, std::string_view>, 4> table = {{
        {"hxxp", "http"},
        {"[.]", "."},
        {"(.)", "."},
        {"[:]", ":"},
    }};

    std::string current(text);
    for (;;) {
        std::string next;
        next.reserve(current.size());
        std::size_t i = 0;
        bool changed = false;
        while (i < current.size()) {
            bool replaced = false;
            for (const auto& [from, to] : table) {
                if (current.compare(i, from.size(), from) == 0) {
                    next.append(to);
                    i += from.size();
                    replaced = true;
                    changed = true;
                    break;
                }
            }
            if (!replaced) {
                next.push_back(current[i]);
                ++i;
            }
        }
        if (!changed) break;
        current = std::move(next);
    }

    if (contains(current, "[dot]") || contains(current, "(dot)") || contains(current, "hxx"))
        log_debug("refang: text still carries an unrecognized defang style");
    return current;
}

bool validate(IocKind kind, std::string_view candidate) {
    if (candidate.empty()) return false;
    switch (kind) {
    case IocKind::ipv4: return valid_ipv4(candidate);
    case IocKind::ipv6: return valid_ipv6(to_lower(candidate));
    case IocKind::domain: return valid_domain(candidate);
    case IocKind::url: return valid_url(candidate);
    case IocKind::md5: return valid_hash(candidate, 32);
    case IocKind::sha1: return valid_hash(candidate, 40);
    case IocKind::sha256: return valid_hash(candidate, 64);
    }
    return false;
}

std::vector<Ioc> extract_iocs_from_text(std::string_view text) {
    std::vector<Match> matches;
    scan_urls(text, matches);
    scan_ipv4(text, matches);
    scan_ipv6(text, matches);
    scan_domains(text, matches);
    scan_hex_runs(text, matches);

    std::stable_sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
        if (a.ioc.span.begin != b.ioc.span.begin) return a.ioc.span.begin < b.ioc.span.begin;
        if (a.ioc.span.end != b.ioc.span.end) return a.ioc.span.end > b.ioc.span.end;
        return static_cast<int>(a.ioc.kind) < static_cast<int>(b.ioc.kind);
    });

    // URL host suppression: a domain entry is dropped when every occurrence
    // of it sits in the host position of a URL with that same host.
    std::vector<const Match*> url_matches;
    for (const Match& m : matches)
        if (m.ioc.kind == IocKind::url) url_matches.push_back(&m);

    std::map<std::string, bool> domain_survives; // value -> has standalone occurrence
    for (const Match& m : matches) {
        if (m.ioc.kind != IocKind::domain) continue;
        bool inside_own_host = false;
        for (const Match* u : url_matches) {
            if (u->host == m.ioc.value && span_within(m.ioc.span, u->host_span)) {
                inside_own_host = true;
                break;
            }
        }
        auto [it, inserted] = domain_survives.emplace(m.ioc.value, !inside_own_host);
        if (!inserted && !inside_own_host) it->second = true;
    }

    std::vector<Ioc> out;
    std::set<std::string> seen;
    for (Match& m : matches) {
        if (m.ioc.kind == IocKind::domain && !domain_survives[m.ioc.value]) continue;
        if (!seen.insert(m.ioc.key()).second) continue;
        out.push_back(std::move(m.ioc));
    }
    return out;
}

std::vector<Ioc> extract_iocs(const Alert& alert) {
    alert.validate();
    return extract_iocs_from_text(refang(alert.raw_text));
}

bool is_private_or_reserved(const Ioc& ioc) {
    if (ioc.kind == IocKind::ipv4) {
        std::vector<std::string> parts = split(ioc.value, '.');
        if (parts.size() != 4) return false;
        int a = std::stoi(parts[0]);
        int b = std::stoi(parts[1]);
        if (a == 0 || a == 10 || a == 127) return true;
        if (a == 100 && b >= 64 && b <= 127) return true;
        if (a == 169 && b == 254) return true;
        if (a == 172 && b >= 16 && b <= 31) return true;
        if (a == 192 && b == 168) return true;
        if (a == 192 && b == 0) return true; // 192.0.0/24 + 192.0.2/24 docs
        if (a == 198 && (b == 18 || b == 19)) return true;
        if (a == 198 && b == 51) return true;  // 198.51.100/24 docs
        if (a == 203 && b == 0) return true;   // 203.0.113/24 docs
        if (a >= 224) return true;             // multicast + reserved
        return false;
    }
    if (ioc.kind == IocKind::ipv6) {
        const std::string& v = ioc.value;
        if (v == "::1" || v == "::") return true;
        if (starts_with(v, "fc") || starts_with(v, "fd")) return true;  // fc00::/7
        if (starts_with(v, "fe8") || starts_with(v, "fe9") ||
            starts_with(v, "fea") || starts_with(v, "feb")) return true; // fe80::/10
        if (starts_with(v, "2001:db8:") || v == "2001:db8") return true; // docs
        return false;
    }
    return false;
}

std::string url_host(std::string_view url_value) {
    std::size_t sep = url_value.find("://");
    if (sep == std::string_view::npos) return {};
    std::string_view rest = url_value.substr(sep + 3);
    std::size_t end = rest.find_first_of("/?#");
    std::string_view auth = rest.substr(0, end);
    std::size_t at = auth.rfind('@');
    if (at != std::string_view::npos) auth = auth.substr(at + 1);
    if (!auth.empty() && auth.front() == '[') {
        std::size_t close = auth.find(']');
        if (close != std::string_view::npos) return to_lower(auth.substr(1, close - 1));
    }
    std::size_t colon = auth.rfind(':');
    if (colon != std::string_view::npos &&
        auth.find(':') == colon) // single colon: host:port
        auth = auth.substr(0, colon);
    return to_lower(auth);
}

} // namespace ctirag
