// Copyright (C) 2026 The RoCoFT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rocoft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ROCOFT_DEFINE_ERROR(Name)       \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

ROCOFT_DEFINE_ERROR(DimensionError);       // shape mismatch between operands
ROCOFT_DEFINE_ERROR(ContractError);        // violated precondition of an API
ROCOFT_DEFINE_ERROR(NumericError);         // non-finite intermediate
ROCOFT_DEFINE_ERROR(ConfigError);          // invalid or unknown configuration
ROCOFT_DEFINE_ERROR(NameError);            // unknown parameter / target name
ROCOFT_DEFINE_ERROR(RangeError);           // value outside its admissible range
ROCOFT_DEFINE_ERROR(InputError);           // bad model input (token ids, lengths)
ROCOFT_DEFINE_ERROR(DataError);            // empty or unusable dataset
ROCOFT_DEFINE_ERROR(ParseError);           // malformed file content
ROCOFT_DEFINE_ERROR(ResourceError);        // guard on problem size exceeded
ROCOFT_DEFINE_ERROR(DegenerateInputError); // zero norm / zero variance inputs

#undef ROCOFT_DEFINE_ERROR

}  // namespace rocoft
