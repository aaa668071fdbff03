#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hsa {

// Root of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Parameter or experiment configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown in a quantity that should hold by construction (e.g. M(q) not SPD).
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

class SingularDynamicsError : public Error {
 public:
  SingularDynamicsError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class CollocationSingularityError : public Error {
 public:
  CollocationSingularityError(const std::string& what, double det)
      : Error(what), determinant_(det) {}
  double determinant() const { return determinant_; }

 private:
  double determinant_;
};

class IntegrationDivergedError : public Error {
 public:
  IntegrationDivergedError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class SteadyStateNotReachedError : public Error {
 public:
  SteadyStateNotReachedError(const std::string& what, double velocity_norm)
      : Error(what), velocity_norm_(velocity_norm) {}
  double velocity_norm() const { return velocity_norm_; }

 private:
  double velocity_norm_;
};

class IllPosedRegressionError : public Error {
 public:
  IllPosedRegressionError(const std::string& what, std::vector<std::string> unidentifiable)
      : Error(with_names(what, unidentifiable)), unidentifiable_(std::move(unidentifiable)) {}
  const std::vector<std::string>& unidentifiable() const { return unidentifiable_; }

 private:
  static std::string with_names(const std::string& what, const std::vector<std::string>& names) {
    if (names.empty()) return what;
    std::string out = what + " (unidentifiable:";
    for (const auto& n : names) out += " " + n;
    return out + ")";
  }
  std::vector<std::string> unidentifiable_;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsa
