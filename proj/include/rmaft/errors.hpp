#pragma once

#include <stdexcept>
#include <string>

namespace rmaft {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class CrashedProcessError : public Error {
 public:
  using Error::Error;
};

/// A protocol rule was broken (unlock without lock, logging after an epoch
/// closed, checkpoint with an open epoch, ...).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// More than m = 1 members of one checkpoint group lost, or nothing left to
/// roll back to.
class CatastrophicFailure : public Error {
 public:
  using Error::Error;
};

class InfeasiblePlacement : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ScenarioError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmaft
