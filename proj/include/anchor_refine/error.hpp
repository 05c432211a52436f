#pragma once

#include <stdexcept>
#include <string>

namespace anchor_refine {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File or message contents could not be parsed.
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Filesystem failure (missing file, unwritable path, short read).
class IoError : public Error {
public:
    using Error::Error;
};

/// Segmenter backend failure that cannot be degraded to a per-anchor diagnostic.
class BackendError : public Error {
public:
    using Error::Error;
};

} // namespace anchor_refine
