#pragma once

#include <stdexcept>
#include <string>

namespace kronrisk {

/// Broad failure classes. The CLI maps each one onto a process exit code.
enum class ErrorKind {
    io,          // missing or unreadable files
    validation,  // malformed or inconsistent input data
    model_parse, // unreadable model documents
    numerical,   // singular or indefinite matrices, degenerate data
    usage,       // bad arguments to a library call
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

} // namespace detail
} // namespace kronrisk
