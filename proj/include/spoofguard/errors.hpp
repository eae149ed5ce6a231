#pragma once

#include <stdexcept>
#include <string>

namespace spoofguard {

enum class ErrorCategory { Config, Domain, Numerical, Singularity, Io };

inline const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Domain: return "domain";
    case ErrorCategory::Numerical: return "numerical";
    case ErrorCategory::Singularity: return "singularity";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCategory::Config, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCategory::Domain, w) {}
};
struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorCategory::Numerical, w) {}
};
struct SingularityError : Error {
  explicit SingularityError(const std::string& w) : Error(ErrorCategory::Singularity, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCategory::Io, w) {}
};

}  // namespace spoofguard
