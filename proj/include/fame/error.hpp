#pragma once

#include <stdexcept>
#include <string>

namespace fame {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (bad CSV row, unresolvable id, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a finite, converged answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File system failure (cannot open, cannot write).
class IoError : public Error {
public:
    using Error::Error;
};

/// Remote resource does not exist (missing wiki page, 404).
class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Transient network failure; the request may be retried.
class NetworkError : public Error {
public:
    using Error::Error;
};

/// Offline mode was asked for a response that was never recorded.
class FixtureMissingError : public Error {
public:
    using Error::Error;
};

}  // namespace fame
