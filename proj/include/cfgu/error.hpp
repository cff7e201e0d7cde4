// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cfgu {

// Error categories shared by all modules. The CLI maps them onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument values: mismatched lengths, non-finite scores, bad token ids.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Checkpoint name/shape mismatches and corrupt container layouts.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Malformed text formats (conversation template, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Problems detected while loading configuration (gazetteers, config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite intermediate.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Transport or HTTP failures talking to an external endpoint.
class ServiceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfgu
