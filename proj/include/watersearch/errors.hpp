#pragma once

#include <stdexcept>
#include <string>

namespace watersearch {

// Invalid configuration value (gamma out of range, k < 2, pool too small...).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed caller input (bad token id, empty text, length mismatch).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of a kernel.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Training failed (empty corpus, unreadable model file).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace watersearch
