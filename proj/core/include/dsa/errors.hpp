#pragma once

#include <stdexcept>
#include <string>

namespace dsa {

// Failure classes. The CLI maps each class to a fixed exit code.
enum class ErrorKind {
  kDimension,
  kDomain,
  kParameter,
  kConfiguration,
  kParse,
  kValidation,
  kUsage,
  kLedger,
  kPlanning,
  kInfeasible,
  kNonConvergence,
  kNumeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace dsa
