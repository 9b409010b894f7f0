// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace spde {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
    invalid_argument,  ///< precondition on an input value violated
    grid_mismatch,     ///< fields or paths live on different lattices
    misaligned,        ///< coordinate or rectangle not on the lattice
    existence,         ///< a = -b criterion failed where a function solution is required
    domain,            ///< function evaluated outside its supplied range
    config,            ///< run configuration rejected
    io,                ///< file system failure
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[nodiscard]] inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::grid_mismatch: return "grid_mismatch";
        case ErrorKind::misaligned: return "misaligned";
        case ErrorKind::existence: return "existence";
        case ErrorKind::domain: return "domain";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

}  // namespace spde
