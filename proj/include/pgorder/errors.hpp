#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pgo {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (bad permutation, length out of range...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Softmax row with every entry masked out.
class DegenerateMaskError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, int epoch) : Error(what), epoch_(epoch) {}
  [[nodiscard]] int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// checkpoint failures
class CheckpointError : public Error {
 public:
  using Error::Error;
};
class VersionMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class DigestMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class TruncatedFile : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class ArchMismatch : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

// embedding service failures; a failed fetch never yields partial results
class EmbedError : public Error {
 public:
  using Error::Error;
};
class CredentialError : public EmbedError {
 public:
  using EmbedError::EmbedError;
};
class AuthError : public EmbedError {
 public:
  using EmbedError::EmbedError;
};
class DimensionMismatch : public EmbedError {
 public:
  using EmbedError::EmbedError;
};
class TransportError : public EmbedError {
 public:
  using EmbedError::EmbedError;
};

}  // namespace pgo
