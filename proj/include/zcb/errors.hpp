#pragma once

#include <stdexcept>
#include <string>

namespace zcb {

/// Caller supplied an argument outside the documented domain
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Argument sits on a pole of a Gamma-type function
struct PoleError : InputError {
    using InputError::InputError;
};

/// Iterative or quadrature procedure failed to meet its tolerance
struct NotConverged : std::runtime_error {
    double residual = 0.0;
    NotConverged(const std::string& what, double res = 0.0)
        : std::runtime_error(what), residual(res) {}
};

/// Invariant that should be impossible for valid input was violated
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InputError(msg);
}

}  // namespace zcb
