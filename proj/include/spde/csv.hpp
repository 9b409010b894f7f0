// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "spde/matrix.hpp"

namespace spde::csv {

/// Locale-independent decimal with 17 significant digits.
[[nodiscard]] inline std::string format(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline void write_row(std::ostream& os, std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) os << ',';
        os << format(values[k]);
    }
    os << '\n';
}

inline void write_header(std::ostream& os, const std::vector<std::string>& names) {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (k) os << ',';
        os << names[k];
    }
    os << '\n';
}

/// Lattice matrix: header row "t" followed by x-coordinates, then one row per
/// time with the t-coordinate in the first column.
inline void write_lattice(std::ostream& os, const Matrix& m, double h) {
    os << 't';
    for (std::size_t j = 0; j < m.cols(); ++j) os << ',' << format(static_cast<double>(j) * h);
    os << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << format(static_cast<double>(i) * h);
        for (double v : m.row(i)) os << ',' << format(v);
        os << '\n';
    }
}

}  // namespace spde::csv
