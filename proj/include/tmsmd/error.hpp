#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tmsmd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible domain (e.g. b <= 1, n == 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Input data cannot support the requested computation.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based and counts the header.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Request exceeds a configured resource cap (state-space size and similar).
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Design matrix is rank deficient.
class RankError : public Error {
public:
    using Error::Error;
};

/// An optimizer ran out of budget. Carries the best point it saw.
class OptimizerError : public Error {
public:
    OptimizerError(const std::string& what, std::vector<double> best_point, double best_value)
        : Error(what), best_point_(std::move(best_point)), best_value_(best_value) {}

    [[nodiscard]] const std::vector<double>& best_point() const noexcept { return best_point_; }
    [[nodiscard]] double best_value() const noexcept { return best_value_; }

private:
    std::vector<double> best_point_;
    double best_value_;
};

/// Too few bootstrap replicates succeeded to report standard errors.
class BootstrapError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw DomainError(what);
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace tmsmd
