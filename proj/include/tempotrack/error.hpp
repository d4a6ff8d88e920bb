#pragma once

#include <stdexcept>

namespace tempotrack {

// Every failure in the library derives from Error so the CLI boundary can
// catch one family.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct InputError : Error { using Error::Error; };
struct ScriptError : Error { using Error::Error; };
struct ArchiveError : Error { using Error::Error; };

}  // namespace tempotrack
