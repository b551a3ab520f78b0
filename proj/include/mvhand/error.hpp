#pragma once

#include <stdexcept>
#include <string>

namespace mvhand {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

// An input file does not match its declared schema.
class SchemaError : public Error {
  public:
    using Error::Error;
};

// Camera parameters violate their invariants.
class InvalidCamera : public Error {
  public:
    using Error::Error;
};

// A point to project has camera-frame depth <= 1e-9 mm.
class NonPositiveDepth : public Error {
  public:
    using Error::Error;
};

// Fewer than two positive-weight observations were supplied.
class InsufficientViews : public Error {
  public:
    using Error::Error;
};

// The triangulation design matrix is rank-deficient.
class DegenerateGeometry : public Error {
  public:
    using Error::Error;
};

// A bone was never observed with both endpoints valid.
class UnobservedBone : public Error {
  public:
    using Error::Error;
};

// Shared valid joints are fewer than three or collinear.
class DegenerateShape : public Error {
  public:
    using Error::Error;
};

// A bone vector collapsed below 1e-6 mm.
class ZeroLengthBone : public Error {
  public:
    using Error::Error;
};

// The objective or its gradient produced NaN/Inf.
class NonFiniteObjective : public Error {
  public:
    using Error::Error;
};

// No (frame, joint) pair survived validity masking.
class EmptyEvaluation : public Error {
  public:
    using Error::Error;
};

// A generator specification is unusable.
class InvalidSpec : public Error {
  public:
    using Error::Error;
};

} // namespace mvhand
