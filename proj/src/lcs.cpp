#include "toktrack/lcs.hpp"

#include <algorithm>
#include <unordered_map>

namespace toktrack {

namespace {

using Pair = std::pair<std::uint32_t, std::uint32_t>;
using Ids = std::vector<std::uint32_t>;

constexpr int kMaxAnchorDepth = 64;

void solve(const Ids& a, const Ids& b,
           std::uint32_t a0, std::uint32_t a1, std::uint32_t b0, std::uint32_t b1,
           int depth, std::vector<Pair>& out);

void dp_align(const Ids& a, const Ids& b,
              std::uint32_t a0, std::uint32_t a1, std::uint32_t b0, std::uint32_t b1,
              std::vector<Pair>& out) {
  const std::uint32_t n = a1 - a0;
  const std::uint32_t m = b1 - b0;
  // dp[i][j] = LCS length of a[a0+i..a1) vs b[b0+j..b1); fits uint16 because
  // n*m <= kLcsExactCells bounds min(n, m) well below 65535.
  std::vector<std::uint16_t> dp(static_cast<std::size_t>(n + 1) * (m + 1), 0);
  auto at = [&](std::uint32_t i, std::uint32_t j) -> std::uint16_t& {
    return dp[static_cast<std::size_t>(i) * (m + 1) + j];
  };
  for (std::uint32_t i = n; i-- > 0;) {
    for (std::uint32_t j = m; j-- > 0;) {
      if (a[a0 + i] == b[b0 + j]) {
        at(i, j) = static_cast<std::uint16_t>(at(i + 1, j + 1) + 1);
      } else {
        at(i, j) = std::max(at(i + 1, j), at(i, j + 1));
      }
    }
  }
  std::uint32_t i = 0, j = 0;
  while (i < n && j < m) {
    if (a[a0 + i] == b[b0 + j]) {
      out.emplace_back(a0 + i, b0 + j);
      ++i;
      ++j;
    } else if (at(i + 1, j) >= at(i, j + 1)) {
      ++i;
    } else {
      ++j;
    }
  }
}

// Matches symbols unique in both residuals, keeps the longest chain that is
// increasing on both sides, then recurses between consecutive chain links.
void anchor_align(const Ids& a, const Ids& b,
                  std::uint32_t a0, std::uint32_t a1, std::uint32_t b0, std::uint32_t b1,
                  int depth, std::vector<Pair>& out) {
  if (depth >= kMaxAnchorDepth) return;
  struct Occurrence {
    std::uint32_t count_a = 0, pos_a = 0;
    std::uint32_t count_b = 0, pos_b = 0;
  };
  std::unordered_map<std::uint32_t, Occurrence> occ;
  occ.reserve((a1 - a0) + (b1 - b0));
  for (std::uint32_t i = a0; i < a1; ++i) {
    auto& o = occ[a[i]];
    if (++o.count_a == 1) o.pos_a = i;
  }
  for (std::uint32_t j = b0; j < b1; ++j) {
    auto& o = occ[b[j]];
    if (++o.count_b == 1) o.pos_b = j;
  }
  std::vector<Pair> anchors;
  for (std::uint32_t i = a0; i < a1; ++i) {
    const auto& o = occ[a[i]];
    if (o.count_a == 1 && o.count_b == 1) anchors.emplace_back(i, o.pos_b);
  }
  if (anchors.empty()) return;
  // Longest strictly increasing subsequence on pos_b (anchors are already
  // sorted and unique on pos_a).
  std::vector<std::uint32_t> tails;      // anchor index with smallest tail pos_b per length
  std::vector<std::uint32_t> prev(anchors.size(), UINT32_MAX);
  for (std::uint32_t k = 0; k < anchors.size(); ++k) {
    std::uint32_t pb = anchors[k].second;
    auto it = std::lower_bound(tails.begin(), tails.end(), pb,
                               [&](std::uint32_t idx, std::uint32_t v) { return anchors[idx].second < v; });
    if (it != tails.begin()) prev[k] = *(it - 1);
    if (it == tails.end()) {
      tails.push_back(k);
    } else {
      *it = k;
    }
  }
  std::vector<Pair> chain;
  for (std::uint32_t k = tails.back(); k != UINT32_MAX; k = prev[k]) chain.push_back(anchors[k]);
  std::reverse(chain.begin(), chain.end());
  std::uint32_t ca = a0, cb = b0;
  for (const auto& [pa, pb] : chain) {
    solve(a, b, ca, pa, cb, pb, depth + 1, out);
    out.emplace_back(pa, pb);
    ca = pa + 1;
    cb = pb + 1;
  }
  solve(a, b, ca, a1, cb, b1, depth + 1, out);
}

void solve(const Ids& a, const Ids& b,
           std::uint32_t a0, std::uint32_t a1, std::uint32_t b0, std::uint32_t b1,
           int depth, std::vector<Pair>& out) {
  while (a0 < a1 && b0 < b1 && a[a0] == b[b0]) {
    out.emplace_back(a0, b0);
    ++a0;
    ++b0;
  }
  std::uint32_t tail = 0;
  while (a0 < a1 - tail && b0 < b1 - tail && a[a1 - tail - 1] == b[b1 - tail - 1]) ++tail;
  a1 -= tail;
  b1 -= tail;
  if (a0 < a1 && b0 < b1) {
    std::uint64_t cells = static_cast<std::uint64_t>(a1 - a0) * (b1 - b0);
    if (cells <= kLcsExactCells) {
      dp_align(a, b, a0, a1, b0, b1, out);
    } else {
      anchor_align(a, b, a0, a1, b0, b1, depth, out);
    }
  }
  for (std::uint32_t k = 0; k < tail; ++k) out.emplace_back(a1 + k, b1 + k);
}

}  // namespace

std::vector<Pair> lcs_align_ids(const Ids& a, const Ids& b) {
  std::vector<Pair> out;
  out.reserve(std::min(a.size(), b.size()));
  solve(a, b, 0, static_cast<std::uint32_t>(a.size()), 0, static_cast<std::uint32_t>(b.size()), 0, out);
  return out;
}

std::vector<Pair> lcs_align(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::unordered_map<std::string_view, std::uint32_t> interned;
  interned.reserve(a.size() + b.size());
  auto intern = [&](const std::vector<std::string>& seq) {
    Ids ids;
    ids.reserve(seq.size());
    for (const auto& s : seq) {
      auto [it, _] = interned.try_emplace(s, static_cast<std::uint32_t>(interned.size()));
      ids.push_back(it->second);
    }
    return ids;
  };
  Ids ia = intern(a);
  Ids ib = intern(b);
  return lcs_align_ids(ia, ib);
}

}  // namespace toktrack
