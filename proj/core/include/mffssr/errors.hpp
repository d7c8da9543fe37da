#pragma once

#include <stdexcept>
#include <string>

namespace mffssr {

// Error taxonomy mirrors the CLI exit codes: usage/config problems exit
// with 2, bad input data with 3, numeric failures (NaN/Inf) with 4.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public UsageError {
public:
    explicit ConfigError(const std::string& msg) : UsageError(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatches name the expected and actual shapes in the message.
class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kUsage = 2;
inline constexpr int kData = 3;
inline constexpr int kNumeric = 4;
}  // namespace exit_code

}  // namespace mffssr
