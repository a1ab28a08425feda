#pragma once

#include <stdexcept>
#include <string>

namespace tcar {

// Model is structurally invalid (cycle, dangling parent, bad noise...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Path enumeration exceeded its cap.
class PathLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weighted-average response time with a (near) vanishing normalizer.
class IllDefinedAverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tcar
