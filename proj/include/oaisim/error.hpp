#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oaisim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed XML. `offset` is the byte offset expat reported.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Response carried a different verb than the one requested.
class ProtocolMismatch : public Error {
public:
    using Error::Error;
};

/// An input violated a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// Persisted weights or similarities predate a corpus mutation.
class StaleError : public Error {
public:
    using Error::Error;
};

class StorageError : public Error {
public:
    using Error::Error;
};

}  // namespace oaisim
