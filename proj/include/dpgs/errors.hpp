#pragma once

#include <stdexcept>

namespace dpgs {

// Caller broke a documented precondition.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input file; message names the offending row where known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or infeasible configuration value.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Privacy ledger composed to more than its declared total.
struct AuditError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem or stream failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dpgs
