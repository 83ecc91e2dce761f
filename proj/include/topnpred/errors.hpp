#pragma once

#include <stdexcept>
#include <string>

namespace topnpred {

// Base of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stream could not be opened or read.
class io_error : public error {
public:
    using error::error;
};

// Bad user configuration (unknown column, invalid flag combination, ...).
class config_error : public error {
public:
    using error::error;
};

// Input data unusable as a whole (e.g. no valid records).
class data_error : public error {
public:
    using error::error;
};

// Argument outside the mathematical domain of an operation.
class domain_error : public error {
public:
    using error::error;
};

// Persisted file that cannot be decoded.
class format_error : public error {
public:
    using error::error;
};

} // namespace topnpred
