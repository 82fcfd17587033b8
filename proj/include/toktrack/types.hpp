#pragma once

#include <cstdint>

namespace toktrack {

using PageId = std::uint64_t;
using RevId = std::uint64_t;

// Token ids are assigned per article, starting at 1 in first-add order.
using TokenId = std::uint32_t;

// Seconds since the Unix epoch, always UTC. Wiki dumps carry second resolution.
using UtcSeconds = std::int64_t;

}  // namespace toktrack
