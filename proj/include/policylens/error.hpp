#pragma once

#include <stdexcept>
#include <string>

namespace policylens {

/// All recoverable failures (bad input files, bad configuration, numeric
/// breakdown) are reported as Error with a human-readable message.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}
