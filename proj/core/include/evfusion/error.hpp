#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evfusion {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or shape mismatch supplied by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Dempster normalizer vanished (kappa == 1).
class TotalConflict : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Every discounted contour product vanished for a voxel.
class DegenerateFusion : public NumericalError {
 public:
  explicit DegenerateFusion(const std::string& what, std::size_t voxel = npos)
      : NumericalError(what), voxel_(voxel) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t voxel() const noexcept { return voxel_; }

 private:
  std::size_t voxel_;
};

class EmptyMask : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid file content (bad magic, truncated payload, ...).
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace evfusion
