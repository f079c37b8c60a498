#pragma once

#include <stdexcept>
#include <string>

namespace pnfc {

// Scenario/model input that violates the schema or a model assumption.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite state or other failure while integrating.
class IntegrationError : public std::runtime_error {
public:
  IntegrationError(const std::string& what, double t, const std::string& component)
      : std::runtime_error(what + " at t=" + std::to_string(t) + " (" + component + ")"),
        time(t), component(component) {}
  double time;
  std::string component;
};

}  // namespace pnfc
