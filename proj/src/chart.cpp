#include "gaplap/chart.hpp"

namespace gaplap::chart {

bool is_projective_tree(const HeadArray& heads, const TreeOptions& opts) {
  const auto l = static_cast<int>(heads.size());
  if (l < 2 || heads[0] != kNoHead) return false;
  int root_children = 0;
  for (int m = 1; m < l; ++m) {
    const int h = heads[m];
    if (h < 0 || h >= l || h == m) return false;
    if (h == 0) ++root_children;
  }
  if (opts.single_root && root_children != 1) return false;

  // Acyclic: every word reaches ROOT within l steps.
  for (int m = 1; m < l; ++m) {
    int cur = m;
    int steps = 0;
    while (cur != 0 && steps <= l) {
      cur = heads[cur];
      ++steps;
    }
    if (cur != 0) return false;
  }

  auto dominates = [&](int h, int k) {
    while (k != 0 && k != h) k = heads[k];
    return k == h;
  };
  for (int m = 1; m < l; ++m) {
    const int h = heads[m];
    for (int k = std::min(h, m) + 1; k < std::max(h, m); ++k)
      if (!dominates(h, k)) return false;
  }
  return true;
}

namespace {

bool crosses(int a1, int b1, int a2, int b2) {
  const int lo1 = std::min(a1, b1), hi1 = std::max(a1, b1);
  const int lo2 = std::min(a2, b2), hi2 = std::max(a2, b2);
  return (lo1 < lo2 && lo2 < hi1 && hi1 < hi2) || (lo2 < lo1 && lo1 < hi2 && hi2 < hi1);
}

void extend(HeadArray& heads, int m, const TreeOptions& opts, std::vector<HeadArray>& out) {
  const int l = static_cast<int>(heads.size());
  if (m == l) {
    if (is_projective_tree(heads, opts)) out.push_back(heads);
    return;
  }
  for (int h = 0; h < l; ++h) {
    if (h == m) continue;
    bool ok = true;
    for (int prev = 1; prev < m && ok; ++prev) ok = !crosses(heads[prev], prev, h, m);
    if (!ok) continue;
    heads[m] = h;
    extend(heads, m + 1, opts, out);
  }
  heads[m] = kNoHead;
}

}  // namespace

std::vector<HeadArray> enumerate_projective(Index length, const TreeOptions& opts) {
  if (length < 2) throw ConfigError("enumeration needs at least ROOT and one word");
  if (length > 9) throw ConfigError("enumeration is limited to length <= 9");
  HeadArray heads(static_cast<std::size_t>(length), kNoHead);
  std::vector<HeadArray> out;
  extend(heads, 1, opts, out);
  return out;
}

}  // namespace gaplap::chart
