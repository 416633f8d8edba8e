#pragma once

#include <stdexcept>
#include <string>

namespace fcsg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid operator parameters, weights, or out-of-range membership values.
struct ParameterError : Error {
  using Error::Error;
};

// Dimension or batch-length mismatches.
struct ShapeError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

// Structurally valid document with unknown/unsupported content.
struct SchemaError : ParseError {
  using ParseError::ParseError;
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& msg, int node_id = -1)
      : Error(msg), node_id(node_id) {}
  int node_id;
};

struct SamplingError : Error {
  using Error::Error;
};

struct ResourceError : Error {
  using Error::Error;
};

}  // namespace fcsg
