#ifndef CVARVI_ERRORS_HPP
#define CVARVI_ERRORS_HPP

#include <stdexcept>

namespace cvarvi {

// Argument values outside an operation's domain (empty sample sets,
// non-finite inputs, shape mismatches, bad schedule parameters, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The operation needs data the object does not carry (e.g. an exact
// CVaR map on a model that only has a sampling oracle).
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Projection target is empty, or numerically indistinguishable from empty.
class InfeasibleSet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sampled cost violated its declared contract (bounds, finiteness).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvarvi

#endif
