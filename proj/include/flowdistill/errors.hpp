// Copyright (C) 2026 The flowdistill Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace flowdistill {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. t > 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Score is undefined: point-mass component evaluated at sigma = 0.
class SingularScoreError : public Error {
 public:
  using Error::Error;
};

// Division by a vanishing schedule coefficient (alpha below 1e-12).
class NumericDegenerateError : public Error {
 public:
  using Error::Error;
};

// Time arguments in the wrong order for a reverse-time step.
class OrderingError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowdistill
