#pragma once

#include <stdexcept>
#include <string>

namespace ionsim {

// A Laguerre node makes the requested transition rate vanish; the pulse time
// would be infinite. Raised instead of returning a non-finite value.
class DegenerateCouplingError : public std::runtime_error {
public:
    explicit DegenerateCouplingError(const std::string& what)
        : std::runtime_error(what) {}
};

// Adaptive integrator could not meet the local error tolerance without the
// step size underflowing.
class StiffnessError : public std::runtime_error {
public:
    explicit StiffnessError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical contract violated at runtime (norm drift, failed decomposition).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration failure carrying the JSON-pointer-style path of the offending
// field, e.g. "/protocol/steps/3/pulse/eta".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace ionsim
