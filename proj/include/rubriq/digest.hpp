#pragma once

#include <string>
#include <string_view>

namespace rubriq {

/// SHA-256 of the input bytes, lowercase hex. Stable across processes
/// and machines; used for group keys, cache keys, and manifests.
std::string sha256_hex(std::string_view bytes);

} // namespace rubriq
