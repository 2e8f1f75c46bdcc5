#pragma once

#include <stdexcept>
#include <string>

namespace hyperctrl {

// Expression or scenario text that does not conform to the documented grammar.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (at position " + std::to_string(position + 1) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Structurally valid input that violates a model or scenario invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature non-convergence, non-finite intermediates outside a simulation.
class NumericsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Simulation state left the sane range (or became non-finite).
class BlowupError : public std::runtime_error {
 public:
  BlowupError(const std::string& msg, double t)
      : std::runtime_error(msg + " at t=" + std::to_string(t)), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

}  // namespace hyperctrl
