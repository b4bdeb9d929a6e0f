#pragma once

#include <stdexcept>
#include <string>

namespace tse {

// Input data or configuration violates a documented contract.
// CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tse
