#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdfuse {

// Error taxonomy mirrored by the CLI exit codes:
//   input_error (and subclasses)  -> 2
//   config_error                  -> 3
//   numerical_error (and subclasses) -> 4
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class dimension_error : public input_error {
public:
  explicit dimension_error(const std::string& msg) : input_error(msg) {}
};

class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative routines attach their objective trace so a failed run can be
// inspected without rerunning.
class convergence_error : public numerical_error {
public:
  convergence_error(const std::string& msg, std::vector<double> trace)
      : numerical_error(msg), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const { return trace_; }

private:
  std::vector<double> trace_;
};

}  // namespace cdfuse
