#pragma once

#include <stdexcept>
#include <string>

namespace evres {

// Base of all library errors. Subclasses map onto CLI exit codes:
// config 2, input format 3, numerical 4, everything else 1.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation
// (out-of-domain spline time, non-positive log input, bad downsample factor).
class DomainError : public Error {
public:
  using Error::Error;
};

// Geometric degeneracy: point behind camera, ray parallel to plane,
// singular homography, camera not facing the scene plane.
class GeometryError : public Error {
public:
  using Error::Error;
};

// Invalid or inconsistent configuration (schema violations included).
class ConfigError : public Error {
public:
  using Error::Error;
};

// Malformed input file (bad magic, truncated payload, wrong sizes).
class FormatError : public Error {
public:
  using Error::Error;
};

// Not enough data to pose the problem (no events, no residuals, < 3 fit points).
class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// Estimator failure: diverged objective, all cells failed.
class NumericalError : public Error {
public:
  using Error::Error;
};

// Filesystem / OS level failures.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace evres
