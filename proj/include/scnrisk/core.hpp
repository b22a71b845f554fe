#pragma once

// Basic vocabulary types shared by every scnrisk module.

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace scnrisk {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family onto a distinct exit code.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (bad flag value, bad schedule string, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input row. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Data that parses but is inconsistent (conflicting sectors, stale swap, ...).
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// No eligible swap pair could be found within the resample budget.
class ExhaustionError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Handles

using FirmId = std::uint32_t;
using LinkId = std::uint32_t;
using ProductId = std::uint32_t;

inline constexpr LinkId kNoLink = std::numeric_limits<LinkId>::max();

// ---------------------------------------------------------------------------
// Weight: monetary flow stored as integer hundredths of a unit, so that
// swap arithmetic conserves strengths bit-exactly.

class Weight {
public:
    static constexpr std::int64_t kTicksPerUnit = 100;

    constexpr Weight() = default;
    static constexpr Weight from_ticks(std::int64_t t) { return Weight(t); }
    static Weight from_units(double units) {
        return Weight(static_cast<std::int64_t>(std::llround(units * kTicksPerUnit)));
    }
    static constexpr Weight unit() { return Weight(kTicksPerUnit); }

    constexpr std::int64_t ticks() const { return ticks_; }
    constexpr double units() const { return static_cast<double>(ticks_) / kTicksPerUnit; }

    constexpr Weight& operator+=(Weight o) { ticks_ += o.ticks_; return *this; }
    constexpr Weight& operator-=(Weight o) { ticks_ -= o.ticks_; return *this; }
    friend constexpr Weight operator+(Weight a, Weight b) { return Weight(a.ticks_ + b.ticks_); }
    friend constexpr Weight operator-(Weight a, Weight b) { return Weight(a.ticks_ - b.ticks_); }
    friend constexpr Weight operator-(Weight a) { return Weight(-a.ticks_); }
    friend constexpr auto operator<=>(Weight, Weight) = default;
    friend constexpr bool operator==(Weight, Weight) = default;

    /// Fixed two-decimal rendering ("1234.50"); inverse of parse().
    std::string to_string() const {
        std::int64_t t = ticks_;
        std::string sign;
        if (t < 0) { sign = "-"; t = -t; }
        std::int64_t whole = t / kTicksPerUnit;
        std::int64_t frac = t % kTicksPerUnit;
        return sign + std::to_string(whole) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
    }

    /// Parses a decimal literal. More than two fractional digits are rounded.
    static bool parse(std::string_view s, Weight& out) {
        double v = 0.0;
        auto* first = s.data();
        auto* last = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || !std::isfinite(v)) return false;
        out = from_units(v);
        return true;
    }

private:
    constexpr explicit Weight(std::int64_t t) : ticks_(t) {}
    std::int64_t ticks_ = 0;
};

// ---------------------------------------------------------------------------
// Sector codes: a NACE-style numeric code of at least three digits.
// nace3 is the product proxy, nace2 the essentiality granularity.

class SectorCode {
public:
    SectorCode() = default;
    explicit SectorCode(std::string code) : code_(std::move(code)) {
        if (code_.size() < 3)
            throw ParseError("sector code '" + code_ + "' shorter than three characters");
    }

    const std::string& str() const { return code_; }
    std::string nace3() const { return code_.substr(0, 3); }
    std::string nace2() const { return code_.substr(0, 2); }

    friend bool operator==(const SectorCode&, const SectorCode&) = default;
    friend auto operator<=>(const SectorCode&, const SectorCode&) = default;

private:
    std::string code_;
};

enum class WeightMode { weighted, unweighted };

inline std::string to_string(WeightMode m) { return m == WeightMode::weighted ? "weighted" : "unweighted"; }

inline WeightMode parse_weight_mode(std::string_view s) {
    if (s == "weighted") return WeightMode::weighted;
    if (s == "unweighted") return WeightMode::unweighted;
    throw ConfigError("unknown weight mode '" + std::string(s) + "'");
}

inline std::uint64_t pair_key(FirmId source, FirmId target) {
    return (static_cast<std::uint64_t>(source) << 32) | target;
}

}  // namespace scnrisk
