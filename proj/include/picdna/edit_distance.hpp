#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

namespace picdna {

/// Unit-cost Levenshtein distance.
inline int levenshtein(std::string_view a, std::string_view b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = int(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// d[len] = levenshtein(pattern, text.substr(0, len)) for every len in
/// [0, text.size()], from a single DP pass.
inline std::vector<int> prefix_distances(std::string_view pattern, std::string_view text) {
  // Rows over text, columns over pattern; column `pattern.size()` of row
  // `len` is the answer for that prefix length.
  std::vector<int> prev(pattern.size() + 1), cur(pattern.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  std::vector<int> out(text.size() + 1);
  out[0] = int(pattern.size());
  for (std::size_t i = 1; i <= text.size(); ++i) {
    cur[0] = int(i);
    for (std::size_t j = 1; j <= pattern.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (text[i - 1] != pattern[j - 1])});
    out[i] = cur[pattern.size()];
    std::swap(prev, cur);
  }
  return out;
}

inline int hamming(std::string_view a, std::string_view b) {
  int d = int(a.size() > b.size() ? a.size() - b.size() : b.size() - a.size());
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace picdna
