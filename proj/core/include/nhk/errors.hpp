#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nhk {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (index out of range, size mismatch).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A function was evaluated outside its domain (zero denominator, sqrt of a
/// non-positive number, sec at a pole). `offset` is the byte offset of the
/// offending sub-expression in its source text, or npos when unknown.
class SingularEvaluation : public Error {
 public:
  explicit SingularEvaluation(const std::string& what, std::size_t offset = npos)
      : Error(what), offset_(offset) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error("parse error at offset " + std::to_string(offset) + ": " + message),
        message_(message),
        offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

/// A name could not be resolved against coordinates or parameters.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A system definition failed validation. Carries every violation found.
class LoadError : public Error {
 public:
  explicit LoadError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  [[nodiscard]] const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "system definition rejected:";
    for (const auto& s : v) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

/// A point or parameter set lies outside the admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A pointwise invariant of the system (metric definiteness, symmetry) failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// The constraint matrix lost rank at the queried point.
class DegenerateConstraint : public Error {
 public:
  using Error::Error;
};

/// The elimination-defined frame is not smooth near the queried point.
class FrameSingularity : public Error {
 public:
  using Error::Error;
};

/// The ε rows over the declared s-columns are not the identity.
class AdaptedMismatch : public Error {
 public:
  using Error::Error;
};

/// The operation needs data the system does not provide (e.g. adapted coordinates).
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Something that must hold by construction did not; indicates a bug.
class InternalInvariant : public Error {
 public:
  using Error::Error;
};

}  // namespace nhk
