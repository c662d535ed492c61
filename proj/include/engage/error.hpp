#pragma once

#include <stdexcept>
#include <string>

namespace engage {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input: malformed files, invalid sessions, unknown ids, out-of-range config.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what) {}
};

/// Numerical failure: non-finite objectives, degenerate optimization state.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what) {}
};

} // namespace engage
