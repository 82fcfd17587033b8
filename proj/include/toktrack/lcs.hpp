#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace toktrack {

// Aligns two token sequences on a longest common subsequence.
//
// Returns index pairs (i, j) with a[i] == b[j], strictly increasing in both
// components. After trimming the common prefix and suffix, residuals whose
// cell product fits kLcsExactCells are solved exactly with a deterministic
// leftmost walk. Larger residuals recurse over tokens that occur exactly
// once on both sides, which keeps memory bounded but may align fewer pairs
// than a true LCS on adversarial input.
inline constexpr std::uint64_t kLcsExactCells = 1u << 22;

std::vector<std::pair<std::uint32_t, std::uint32_t>> lcs_align(
    const std::vector<std::string>& a, const std::vector<std::string>& b);

// Same algorithm over pre-interned symbol ids.
std::vector<std::pair<std::uint32_t, std::uint32_t>> lcs_align_ids(
    const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b);

}  // namespace toktrack
