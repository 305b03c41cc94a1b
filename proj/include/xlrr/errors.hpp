#pragma once

#include <stdexcept>
#include <string>

namespace xlrr {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files (passages, qrels, run files, configs).
class ParseError : public Error {
public:
    using Error::Error;
};

// Violated type invariants or preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Prompt or request does not fit the model's context window.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Backend failure that survived the retry policy.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what, int status = 0)
        : Error(what), status_(status) {}

    int status() const { return status_; }

private:
    int status_;
};

} // namespace xlrr
