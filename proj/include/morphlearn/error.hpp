#pragma once

#include <stdexcept>
#include <string>

namespace morphlearn {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes or lengths that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
public:
    using Error::Error;
};

class MorphologyError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Violations of the external-environment wire protocol, timeouts and child exits.
class ProtocolError : public Error {
public:
    using Error::Error;
};

} // namespace morphlearn
