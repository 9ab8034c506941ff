#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ocd {

/// Index into a Vocabulary. Content tokens occupy [0, content_size), followed
/// by eos and pad.
using Token = std::int32_t;

/// Sentinel for "eos" wherever a token-or-eos is accepted without a
/// vocabulary at hand (kernel, oracles). Dense vectors map it to index
/// `content_size`.
inline constexpr Token kEos = -1;

/// A token sequence without the terminal eos.
using Sequence = std::vector<Token>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ocd
