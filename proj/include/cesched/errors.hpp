#ifndef CESCHED_ERRORS_HPP
#define CESCHED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cesched {

// Exit codes used by the CLI: 0 success, 2 config error, 3 infeasibility,
// 4 numerical failure.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace cesched

#endif // CESCHED_ERRORS_HPP
