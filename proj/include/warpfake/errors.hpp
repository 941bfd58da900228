#pragma once

#include <stdexcept>
#include <string>

namespace warpfake {

/// Base class for every domain error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WARPFAKE_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

WARPFAKE_DEFINE_ERROR(InvalidArgument);
WARPFAKE_DEFINE_ERROR(DegenerateConfiguration);
WARPFAKE_DEFINE_ERROR(NonInvertible);
WARPFAKE_DEFINE_ERROR(DegeneratePolygon);
WARPFAKE_DEFINE_ERROR(DimensionMismatch);
WARPFAKE_DEFINE_ERROR(EmptyBox);
WARPFAKE_DEFINE_ERROR(InsufficientInput);
WARPFAKE_DEFINE_ERROR(ShapeMismatch);
WARPFAKE_DEFINE_ERROR(SingleClass);
WARPFAKE_DEFINE_ERROR(EmptyVideo);
WARPFAKE_DEFINE_ERROR(FormatError);
WARPFAKE_DEFINE_ERROR(ConfigError);
WARPFAKE_DEFINE_ERROR(IoError);

#undef WARPFAKE_DEFINE_ERROR

}  // namespace warpfake
