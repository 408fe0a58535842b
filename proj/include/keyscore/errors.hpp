#pragma once

#include <stdexcept>
#include <string>

namespace keyscore {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input violates a data-model invariant (bad JSON line, probability outside
/// (0,1], unknown doc_id, ...). The CLI maps this to exit code 1.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A phrase that has no word tokens left after tokenization.
class EmptyPhraseError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A file or service could not be read or written. The CLI maps this to
/// exit code 2.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace keyscore
