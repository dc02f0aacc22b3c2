#ifndef DCMT_ERRORS_HPP
#define DCMT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dcmt {

/// A caller broke an operation's precondition (bad index, infeasible action, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownStrategyError : public ConfigError {
 public:
  explicit UnknownStrategyError(const std::string& name)
      : ConfigError("unknown strategy '" + name + "'"), name_(name) {}
  [[nodiscard]] const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// NaN/Inf encountered in a numeric routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or incompatible on-disk artifact.
class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dcmt

#endif  // DCMT_ERRORS_HPP
