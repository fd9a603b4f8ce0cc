#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dfadapt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed mesh/config/expression text.
class ParseError : public Error {
public:
    using Error::Error;
};

// Problem data violating a model assumption (non-SPD K^-1, incompatible b/g, NaN data).
class DataError : public Error {
public:
    using Error::Error;
};

// Linear solver failure; carries the residual history for diagnosis.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace dfadapt
