#pragma once

#include <stdexcept>
#include <string>

namespace rtstokes {

/// Base of every exception thrown by the solver core. The C API maps the
/// concrete type onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: out-of-range parameters, malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Mesh topology or geometry violates an invariant.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failure: factorization breakdown, non-convergence,
/// indefiniteness.
class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rtstokes
