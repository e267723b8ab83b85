#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace jumpscatter {

/// Minutes on each side of the jump minute in an extracted window.
inline constexpr int kHalfWindow = 59;
/// Number of samples in a jump window (t = -59 .. +59).
inline constexpr int kWindowLength = 2 * kHalfWindow + 1;

/// Minute-precision wall-clock timestamp (exchange local time, no zone).
using Minute = std::chrono::sys_time<std::chrono::minutes>;
using Date = std::chrono::sys_days;

/// Error categories map onto the CLI exit codes (2, 3 and 4).
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Malformed input row; carries the 1-based line number.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class AlignmentError : public DataError {
public:
    using DataError::DataError;
};

class PreconditionError : public DataError {
public:
    using DataError::DataError;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

class DegenerateVolatilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateWindowError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ScaleOverflowError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Date / time helpers. Formats are ISO "YYYY-MM-DD" and "HH:MM".

/// Throws std::invalid_argument on malformed input.
Date parse_date(std::string_view text);
std::chrono::minutes parse_time_of_day(std::string_view text);
std::string format_date(Date d);
std::string format_time_of_day(std::chrono::minutes m);
std::string format_minute(Minute m);

inline Minute make_minute(Date d, std::chrono::minutes tod) { return Minute{d.time_since_epoch()} + tod; }
inline Date date_of(Minute m) { return std::chrono::floor<std::chrono::days>(m); }
inline std::chrono::minutes time_of_day(Minute m) { return m - Minute{date_of(m).time_since_epoch()}; }

}  // namespace jumpscatter
