#pragma once

#include <stdexcept>
#include <string>

namespace fpbp {

// Base class for all library errors. Subclasses distinguish config/usage
// problems from data-dependent failures so callers can map them to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class UnknownColorError : public DataError {
 public:
  UnknownColorError(int x, int y, const std::string& color)
      : DataError("unknown palette color " + color + " at pixel (" + std::to_string(x) + ", " +
                  std::to_string(y) + ")"),
        x_px(x),
        y_px(y) {}
  int x_px;
  int y_px;
};

class DegenerateMapError : public DataError {
 public:
  using DataError::DataError;
};

class OutOfBoundsError : public DataError {
 public:
  using DataError::DataError;
};

class ZeroGradientError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientBeaconsError : public DataError {
 public:
  using DataError::DataError;
};

class NoCandidatesError : public DataError {
 public:
  using DataError::DataError;
};

class SingularGeometryError : public DataError {
 public:
  using DataError::DataError;
};

class ZeroQuaternionError : public DataError {
 public:
  using DataError::DataError;
};

class VerticalDegenerateError : public DataError {
 public:
  using DataError::DataError;
};

class AllZeroWeightsError : public DataError {
 public:
  using DataError::DataError;
};

class InfeasiblePathError : public DataError {
 public:
  InfeasiblePathError(const std::string& what, int segment)
      : DataError(what), segment_index(segment) {}
  int segment_index;
};

class LengthMismatchError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace fpbp
