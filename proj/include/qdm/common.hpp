#pragma once

#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdm {

struct PhysicalConstants {
    double gamma_e = 28.024e9;    // Hz/T, i.e. 28.024 kHz/uT
    double D0 = 2.87e9;           // Hz
    double mu0 = 4.0e-7 * std::numbers::pi;
};

inline constexpr PhysicalConstants constants{};
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// precondition violations on library inputs
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// iterative numerics that ran out of budget
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// malformed or unusable data (files, monotone line-cuts, ...)
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line(line) {}
    int line;
};

// non-fatal conditions collected by long-running operations
struct Diagnostics {
    std::vector<std::string> warnings;
    void warn(std::string msg) { warnings.push_back(std::move(msg)); }
};

inline void warn_to(Diagnostics* d, std::string msg) {
    if (d) d->warn(std::move(msg));
}

}  // namespace qdm
