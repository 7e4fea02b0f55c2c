#pragma once

#include <stdexcept>
#include <string>

namespace tango {

// Invalid argument value (out-of-range schedule, empty dataset, bad config).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's shape or usage contract.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Pressure level of an all-zero signal.
class UndefinedLevelError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed file, wrong magic/version, or hash mismatch on resume.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tango
