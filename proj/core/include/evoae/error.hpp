#pragma once

#include <stdexcept>
#include <string>

namespace evoae {

/// Invalid run/scenario/encoding configuration (bad sizes, bounds, unknown keys).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (length mismatch, wrong dims).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported file content (PPM headers, weight files, checkpoints).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Any failure to obtain a classification from an oracle.
class OracleError : public std::runtime_error {
public:
    OracleError(const std::string& what, int attempts = 1, bool retryable = false)
        : std::runtime_error(what), attempts_(attempts), retryable_(retryable) {}

    int attempts() const noexcept { return attempts_; }
    bool retryable() const noexcept { return retryable_; }

private:
    int attempts_;
    bool retryable_;
};

class OracleTimeout : public OracleError {
public:
    OracleTimeout(const std::string& what, int attempts) : OracleError(what, attempts, true) {}
};

/// Transport-level failure: connection refused, reset, DNS.
class OracleTransportError : public OracleError {
public:
    OracleTransportError(const std::string& what, int attempts) : OracleError(what, attempts, true) {}
};

class OracleHttpStatus : public OracleError {
public:
    OracleHttpStatus(const std::string& what, int status, int attempts)
        : OracleError(what, attempts, status >= 500), status_(status) {}

    int status() const noexcept { return status_; }

private:
    int status_;
};

/// Response body parsed but violates the protocol or the distribution invariants.
class OracleMalformedResponse : public OracleError {
public:
    OracleMalformedResponse(const std::string& what, int attempts = 1) : OracleError(what, attempts, false) {}
};

} // namespace evoae
