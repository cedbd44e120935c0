#pragma once

#include <stdexcept>
#include <string>

namespace rgflow {

/// A computation that was well posed but failed numerically: eigensolver
/// breakdown, a singular elimination block, a missing calibration bracket,
/// or a pole where the caller needs a finite coupling.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rgflow
