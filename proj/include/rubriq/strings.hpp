#pragma once

#include <string>
#include <string_view>

namespace rubriq {

/// Strips ASCII whitespace from both ends. Bytes >= 0x80 are never
/// treated as whitespace, so UTF-8 text (umlauts included) survives intact.
std::string_view trim_view(std::string_view s);

inline std::string trim(std::string_view s) {
    return std::string(trim_view(s));
}

/// ASCII-only lowercase; non-ASCII bytes pass through unchanged.
std::string to_lower_ascii(std::string_view s);

/// Case-insensitive (ASCII) equality.
bool iequals_ascii(std::string_view a, std::string_view b);

} // namespace rubriq
