#pragma once

#include <stdexcept>
#include <string>

namespace cdp {

/// Invalid argument or configuration value supplied by the caller.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operand shapes that do not agree (template vs. image, k multiples, ...).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two codebooks (or a codebook and a probe) built under different settings.
class CompatibilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File or format problem while reading or writing artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cdp
