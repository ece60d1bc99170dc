#pragma once

#include <string>

namespace gfbm {

/// Shortest-safe round-trip text for a double: 17 significant digits.
std::string format_double(double x);

/// RFC-4180 field quoting: quotes only when the field contains a comma,
/// quote, CR or LF.
std::string csv_field(const std::string& s);

}  // namespace gfbm
