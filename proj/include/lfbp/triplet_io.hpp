#pragma once

#include <string>

#include "lfbp/typespace.hpp"

namespace lfbp {

/// Parses {"family":"finite","K":[[...]],"gamma":[...],"m":...} or
/// {"family":"exp","lambda":...,"mu":...,"m":...}.
///
/// Throws InvalidTriplet whose message names the offending line (for syntax
/// errors) or field (for invariant violations).
Triplet parse_triplet(const std::string& json_text);

/// `source` is either inline JSON (first non-space character '{') or a path.
Triplet load_triplet(const std::string& source);

std::string triplet_to_json(const Triplet& triplet);

}  // namespace lfbp
