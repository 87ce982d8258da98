#pragma once
// Error types shared by the library and the command line tool.
//
// The CLI maps UsageError and ConfigError to exit code 2 and NumericError
// to exit code 3.

#include <stdexcept>
#include <string>

namespace lfc {

// Index or argument outside the valid domain (node off the lattice, bad column).
class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Invalid configuration values or malformed input files.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Misuse of an operation (empty sample stream, unsupported mode).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Factorization failures and other numerical breakdowns.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Broken internal invariant (cache audit failure).
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace lfc
