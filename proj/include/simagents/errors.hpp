#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace simagents {

// Input or configuration violates a documented invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed document (scenario file, rollout file, wire message).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A predictor returned something that breaks the ModeSet contract.
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Any failure raised while obtaining a prediction. Carries the simulation
// step when the engine knows it.
class PredictorError : public std::runtime_error {
 public:
  explicit PredictorError(const std::string& what,
                          std::optional<std::size_t> step = std::nullopt)
      : std::runtime_error(what), step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

enum class BridgeFailure { timeout, protocol, connection };

inline std::string_view to_string(BridgeFailure kind) {
  switch (kind) {
    case BridgeFailure::timeout: return "timeout";
    case BridgeFailure::protocol: return "protocol violation";
    case BridgeFailure::connection: return "connection lost";
  }
  return "unknown";
}

class BridgeError : public PredictorError {
 public:
  BridgeError(BridgeFailure kind, const std::string& what,
              std::string payload_excerpt = {},
              std::optional<std::size_t> step = std::nullopt)
      : PredictorError(std::string(to_string(kind)) + ": " + what, step),
        kind_(kind),
        detail_(what),
        excerpt_(std::move(payload_excerpt)) {}

  BridgeFailure kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& payload_excerpt() const noexcept { return excerpt_; }

 private:
  BridgeFailure kind_;
  std::string detail_;
  std::string excerpt_;
};

}  // namespace simagents
