#pragma once

#include <stdexcept>
#include <string>

namespace stylo {

// A story that the cleaning pipeline reduced to nothing.
struct StoryUnusable : std::runtime_error {
  explicit StoryUnusable(const std::string& what) : std::runtime_error(what) {}
};

// A split/sampling budget that the available data cannot satisfy.
struct InsufficientData : std::runtime_error {
  explicit InsufficientData(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite loss or gradient during optimization.
struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stylo
