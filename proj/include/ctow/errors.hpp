#pragma once

#include <stdexcept>
#include <string>

namespace ctow {

// Base class for all toolkit errors caused by bad inputs or bad files.
// The CLI maps these to exit code 1; anything else is an internal error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedCsv : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct UnknownColumn : Error { using Error::Error; };
struct ClassTooSmall : Error { using Error::Error; };
struct BadFoldIndex : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct SingleClass : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct InvalidFixedWeight : Error { using Error::Error; };
struct BadIndex : Error { using Error::Error; };
struct IncompatibleModel : Error { using Error::Error; };
struct CorruptBundle : Error { using Error::Error; };

} // namespace ctow
