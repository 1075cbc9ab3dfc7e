#pragma once

#include <stdexcept>
#include <string>

namespace meshfair {

// Base for every error the library raises. Callers that only care about
// "something about the run was invalid" catch this; tests match subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnknownNode : public Error {
 public:
  using Error::Error;
};

class Unreachable : public Error {
 public:
  using Error::Error;
};

class ConnectivityFailure : public Error {
 public:
  using Error::Error;
};

class InvalidSizes : public Error {
 public:
  using Error::Error;
};

class NonConnectedTopology : public Error {
 public:
  using Error::Error;
};

class CandidateNotMember : public Error {
 public:
  using Error::Error;
};

class NoFeasibleHost : public Error {
 public:
  using Error::Error;
};

class EmptyLog : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace meshfair
