#pragma once

#include <stdexcept>
#include <string>

namespace probe {

// Error taxonomy mirrored by the CLI exit codes:
//   SchemaError -> 1, NumericalFault/DimensionError -> 2, IoError -> 3.

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalFault : std::runtime_error {
    explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace probe
