#pragma once

#include <stdexcept>
#include <string>

namespace heatpot {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent run configuration (CLI exit code 2).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Gauss-transform plan construction failed its verification sweep.
struct PlanError : Error {
    explicit PlanError(const std::string& msg) : Error(msg) {}
};

/// Time stepping could not proceed (nonlinear solve diverged, bad state, ...).
struct SolveError : Error {
    explicit SolveError(const std::string& msg) : Error(msg) {}
};

} // namespace heatpot
