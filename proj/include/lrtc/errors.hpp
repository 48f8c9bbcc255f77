#pragma once

#include <stdexcept>
#include <string>

namespace lrtc {

// Bad dimensions or out-of-range indices.
struct shape_error : std::invalid_argument {
  explicit shape_error(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or semantically invalid input (files, masks, config values).
struct input_error : std::invalid_argument {
  explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// A matrix that must be SPD is singular or indefinite beyond repair.
struct conditioning_error : std::runtime_error {
  explicit conditioning_error(const std::string& what) : std::runtime_error(what) {}
};

// Solver produced a non-finite objective.
struct divergence_error : std::runtime_error {
  explicit divergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lrtc
