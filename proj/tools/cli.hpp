#pragma once

#include <string>
#include <vector>

namespace qdm {

// exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_data = 3;
inline constexpr int exit_fit_failures = 4;

int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);  // args excludes the program name

// q in [0, 1], linear interpolation between order statistics
double percentile(std::vector<double> v, double q);

}  // namespace qdm
