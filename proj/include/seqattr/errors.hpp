// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace seqattr {

// Every failure the library reports derives from Error. The category decides
// the CLI exit code (see tools/seqattr.cpp).
enum class ErrorCategory { kUsage, kData, kNumeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define SEQATTR_DEFINE_ERROR(Name, Category)                  \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what)                    \
        : Error(ErrorCategory::Category, what) {}             \
  };

SEQATTR_DEFINE_ERROR(UsageError, kUsage)
SEQATTR_DEFINE_ERROR(DimensionError, kData)
SEQATTR_DEFINE_ERROR(IndexError, kData)
SEQATTR_DEFINE_ERROR(ContractError, kData)
SEQATTR_DEFINE_ERROR(ConfigError, kData)
SEQATTR_DEFINE_ERROR(CodecError, kData)
SEQATTR_DEFINE_ERROR(LengthError, kData)
SEQATTR_DEFINE_ERROR(DataError, kData)
SEQATTR_DEFINE_ERROR(VersionError, kData)
SEQATTR_DEFINE_ERROR(NumericError, kNumeric)
SEQATTR_DEFINE_ERROR(InfeasibleError, kData)

#undef SEQATTR_DEFINE_ERROR

}  // namespace seqattr
