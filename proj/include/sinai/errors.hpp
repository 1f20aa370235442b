#pragma once

#include <stdexcept>
#include <string>

namespace sinai {

/// Invalid user-supplied parameters (bad rho0, empty window, lambda <= 0, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A lattice index outside the window an object was built on.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A caller broke an operation's precondition (e.g. passed a non-valley).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sinai
