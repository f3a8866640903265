#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mogp::csv {

using Row = std::vector<std::string>;

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line endings.
/// Blank lines are dropped.
std::vector<Row> parse(std::string_view text);

std::string escape(std::string_view field);

/// Shortest round-trip decimal representation, stable across runs.
std::string format_double(double v);

}  // namespace mogp::csv
