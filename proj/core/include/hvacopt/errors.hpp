#ifndef HVACOPT_ERRORS_HPP
#define HVACOPT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hvacopt {

/// Invalid physical model or exogenous data (bad bounds, asymmetric coupling,
/// unstable discretization, length mismatches).
class ModelError : public std::invalid_argument {
public:
    explicit ModelError(const std::string& what) : std::invalid_argument(what) {}
};

/// A solver failed: infeasible local set, unbounded objective, or an
/// internal consistency check tripped.
class SolveError : public std::runtime_error {
public:
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hvacopt

#endif
