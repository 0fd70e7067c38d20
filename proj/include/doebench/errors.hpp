#pragma once

#include <stdexcept>
#include <string>

namespace doebench {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DOEBENCH_DEFINE_ERROR(Name)      \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

DOEBENCH_DEFINE_ERROR(CoordinateOutOfRange);
DOEBENCH_DEFINE_ERROR(DegenerateFunction);
DOEBENCH_DEFINE_ERROR(DegenerateRange);
DOEBENCH_DEFINE_ERROR(SingularInformation);
DOEBENCH_DEFINE_ERROR(BadFraction);
DOEBENCH_DEFINE_ERROR(RankDeficient);
DOEBENCH_DEFINE_ERROR(NotPositiveDefinite);
DOEBENCH_DEFINE_ERROR(LengthMismatch);
DOEBENCH_DEFINE_ERROR(BadK);
DOEBENCH_DEFINE_ERROR(InsufficientData);
DOEBENCH_DEFINE_ERROR(ConfigError);

#undef DOEBENCH_DEFINE_ERROR

}  // namespace doebench
