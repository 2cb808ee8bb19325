#ifndef CTOED_ERROR_HPP
#define CTOED_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ctoed {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBasis : public Error {
 public:
  using Error::Error;
};

class InvalidKernel : public Error {
 public:
  using Error::Error;
};

class InvalidDesign : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be non-singular (C, B, X'Σ⁻¹X, M₀) is not.
class SingularModel : public Error {
 public:
  using Error::Error;
};

/// No weight vector satisfies the unbiasedness identity.
class InfeasibleUnbiasedness : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Point outside the domain of a map (e.g. q⁻¹ outside [q(a), q(b)]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation needs data the inputs do not carry (e.g. second derivatives).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

}  // namespace ctoed

#endif  // CTOED_ERROR_HPP
