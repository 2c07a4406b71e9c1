#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace loadmix::csv {

/// Splits one CSV record. Double-quoted fields may contain commas; `""`
/// inside quotes is a literal quote. Surrounding whitespace is trimmed.
std::vector<std::string> split(std::string_view line);

/// Parses a complete decimal number (no thousands separators). Returns false
/// on malformed input.
bool parse_double(std::string_view text, double& out);

/// Shortest round-trip decimal rendering of `v`.
std::string format_double(double v);

/// Quotes `field` when it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string_view trim(std::string_view s);

} // namespace loadmix::csv
