#pragma once

#include <stdexcept>
#include <string>

namespace chamberlens {

/// Input that violates a documented contract (bad schema, bad parameters).
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Header or line layout that cannot be interpreted at all.
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Unreadable or unwritable file. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace chamberlens
