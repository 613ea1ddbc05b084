#pragma once

#include <algorithm>
#include <string_view>
#include <vector>

namespace textspot {

// Case-insensitive Levenshtein distance with unit costs.
inline int edit_distance(std::string_view a, std::string_view b) {
  auto fold = [](char c) -> char {
    return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
  };
  size_t n = a.size(), m = b.size();
  if (n == 0) return static_cast<int>(m);
  if (m == 0) return static_cast<int>(n);
  std::vector<int> row(m + 1);
  for (size_t j = 0; j <= m; ++j) row[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = diag + (fold(a[i - 1]) == fold(b[j - 1]) ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[m];
}

}  // namespace textspot
