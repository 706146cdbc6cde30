#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ctirag {

// FNV-1a, 64 bit. Non-cryptographic; used for content digests in traces,
// store checksums, and template pinning.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view haystack, std::string_view needle);

bool is_hex_digit(char c);
bool is_hex_string(std::string_view s);

// Approximate token count when no tokenizer is available: ceil(chars / 4).
std::size_t approx_tokens(std::string_view text);

// UTC instants are carried as unix seconds and rendered ISO-8601 ("...Z").
std::string format_utc(std::int64_t unix_seconds);
// Accepts "YYYY-MM-DDTHH:MM:SSZ"; returns false on malformed input.
bool parse_utc(std::string_view iso8601, std::int64_t& out_unix_seconds);

// Clock seam. The system clock is the default; deterministic runs use a
// fixed clock so traces and serialized outputs are byte-stable.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_unix_seconds() = 0;
    virtual std::int64_t now_unix_millis() = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_unix_seconds() override;
    std::int64_t now_unix_millis() override;
};

// Starts at a fixed instant and advances by a fixed step on every read.
class FixedClock final : public Clock {
public:
    explicit FixedClock(std::int64_t start_unix_seconds, std::int64_t step_millis = 1);
    std::int64_t now_unix_seconds() override;
    std::int64_t now_unix_millis() override;

private:
    std::int64_t next_millis_;
    std::int64_t step_millis_;
};

using ClockPtr = std::shared_ptr<Clock>;
ClockPtr system_clock();

std::string read_file(const std::string& path); // throws Error(store_io)
void write_file(const std::string& path, std::string_view content);

} // namespace ctirag
