#pragma once

#include <stdexcept>
#include <string>

namespace rubriq {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Command-line / configuration misuse (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace rubriq
