#pragma once

#include <stdexcept>
#include <string>

namespace smartboost {

enum class ErrorKind {
    MalformedSpan,
    Shape,
    OracleTooLarge,
    EmptyData,
    InvalidGold,
    MissingLexiconEntry,
    Keying,
    Config,
    Format,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

// Single exception type for every data and contract failure in the library.
// The kind lets callers (and the CLI's exit-code mapping) branch without
// string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedSpan: return "malformed span";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::OracleTooLarge: return "oracle too large";
        case ErrorKind::EmptyData: return "empty data";
        case ErrorKind::InvalidGold: return "gold violates structure";
        case ErrorKind::MissingLexiconEntry: return "missing lexicon entry";
        case ErrorKind::Keying: return "keying error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Io: return "io error";
    }
    return "error";
}

}  // namespace smartboost
