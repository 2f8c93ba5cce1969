#pragma once

#include <stdexcept>
#include <string>

namespace gaugelab {

enum class ErrorKind {
  Dimension,
  CutLocus,
  Precondition,
  Solver,
  Integrator,
  Config,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, long index = -1)
      : std::runtime_error(what), kind_(kind), index_(index) {}

  ErrorKind kind() const { return kind_; }
  // cell, face or slice index the failure refers to; -1 if none
  long index() const { return index_; }

 private:
  ErrorKind kind_;
  long index_;
};

}  // namespace gaugelab
