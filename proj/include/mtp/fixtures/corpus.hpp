#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtp::fixtures {

/// Templated English-like sentences from small word lists, grouped into
/// documents of a few sentences each, until the total reaches target_bytes.
/// Pure function of the seed.
std::vector<std::string> toy_corpus(std::uint64_t seed, std::size_t target_bytes);

}  // namespace mtp::fixtures
