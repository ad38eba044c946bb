#pragma once

#include <stdexcept>
#include <string>

namespace intervene {

/// Violated input contract (out-of-domain action, bad bounds, ...).
class PreconditionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed data supplied through an oracle (e.g. unnormalized distribution).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Vanishing denominator in the intervention-rate formula.
class SingularityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Enumeration would exceed the configured profile cap.
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NoSupportableProfile : public std::runtime_error {
public:
  NoSupportableProfile() : std::runtime_error("no supportable profile on the grid") {}
};

} // namespace intervene
