#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nsi {

/// Echo does not fit in the configured record length.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed RF container; carries the byte offset where parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  [[nodiscard]] std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Filter requirements could not be met.
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A level crossing or search window fell outside the measured extent.
class ExtentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)), cause_(cause) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }
  [[nodiscard]] const std::string& cause() const { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

}  // namespace nsi
