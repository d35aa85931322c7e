#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cotemb {

/// SHA-256 of `text`, lowercase hex. Deterministic function of the bytes only.
std::string fingerprint(std::string_view text);

/// Fast non-cryptographic hash for feature bucketing.
std::uint64_t fnv1a64(std::string_view text);

}  // namespace cotemb
