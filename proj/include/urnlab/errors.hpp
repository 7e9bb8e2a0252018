#pragma once

#include <stdexcept>
#include <string>

namespace urnlab {

// Error categories, aligned with the CLI exit codes (see tools/urnlab.cpp):
// config error -> 2, cap exceeded -> 3, degenerate model -> 4, step budget -> 5.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StepBudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace urnlab
