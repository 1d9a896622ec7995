#pragma once

#include <stdexcept>
#include <string>

namespace cavityq {

enum class ErrorKind {
    Usage,
    Parse,
    Numeric,
    Capacity,
    Shape,
    Argument,
    Degenerate,
};

// Process exit code for the CLI. Shape/argument/degenerate failures are
// reported as numeric (3); only parse and capacity errors get their own code.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Usage: return 1;
    case ErrorKind::Parse: return 2;
    case ErrorKind::Capacity: return 4;
    default: return 3;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

} // namespace cavityq
