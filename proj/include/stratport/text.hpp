#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stratport::text {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);
/// Fixed notation with `digits` after the point.
std::string format_fixed(double x, int digits);
/// Whole-field parse; throws InputError on junk. Empty fields are not
/// accepted here (callers treat them as missing).
double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace stratport::text
