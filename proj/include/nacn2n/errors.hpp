// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nacn2n {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

/// Pixel values outside the range a target format can represent.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Mathematical precondition violated (negative Poisson rate, degenerate range, NaN pixels).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value; `key()` names the offending setting when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, std::string key = {})
        : Error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class RegistryError : public Error {
public:
    using Error::Error;
};

/// A registry name that is reserved but has no implementation.
class NotImplementedError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace nacn2n
