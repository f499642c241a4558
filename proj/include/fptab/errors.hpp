#pragma once

#include <stdexcept>
#include <string>

namespace fptab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DuplicateKey : Error { using Error::Error; };
struct TypeError : Error { using Error::Error; };
struct SchemaMismatch : Error { using Error::Error; };
struct InvalidKey : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };
struct DegenerateColumn : Error { using Error::Error; };
struct EmptyIndex : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ConfigMismatch : Error { using Error::Error; };
struct EmptyResult : Error { using Error::Error; };
struct EmptyColumn : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace fptab
