#pragma once

#include <stdexcept>
#include <string>

namespace adarf {

// Invalid user configuration (bad JSON, unknown sampler, bad strategy).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or unusable input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A test-split row reached a stage that must only see training rows.
class LeakageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace adarf
