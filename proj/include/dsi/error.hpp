// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsi {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data is malformed or violates a documented invariant.
class DataError : public Error {
public:
    using Error::Error;
};

/// One rejected input line (1-based physical line number).
struct LineError {
    std::size_t line = 0;
    std::string field;
    std::string message;

    friend bool operator==(const LineError&, const LineError&) = default;
};

inline std::string describe(const LineError& e)
{
    std::string out = "line " + std::to_string(e.line);
    if (!e.field.empty()) {
        out += " [" + e.field + "]";
    }
    return out + ": " + e.message;
}

/// Raised by strict-mode parsers on the first invalid line.
class ParseError : public DataError {
public:
    explicit ParseError(LineError e) : DataError(describe(e)), error_(std::move(e)) {}

    const LineError& detail() const noexcept { return error_; }

private:
    LineError error_;
};

/// Polygon or other geometry failed validation.
class GeometryError : public DataError {
public:
    using DataError::DataError;
};

} // namespace dsi
