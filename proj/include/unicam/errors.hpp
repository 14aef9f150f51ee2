#pragma once

#include <stdexcept>

namespace unicam {

// Caller-supplied data violates an operation's precondition. The CLI maps
// this to exit code 2; everything else is treated as an internal failure.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace unicam
