#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code paths with the library beyond plain data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "muchlac/raster.hpp"

namespace oracle {

using Point = std::tuple<int, int, int>;  // slot, dy, dx
using Form = std::vector<Point>;           // sorted multiset

inline Form sorted(Form f) {
  std::sort(f.begin(), f.end());
  return f;
}

// Every multiset {reference in slot 0} + k points of the m-scaled 3x3 lattice,
// k <= max_order, over `slots` slots. Cross-channel forms must touch slot 1.
inline std::vector<Form> all_forms(int m, int max_order, int slots) {
  std::vector<Point> cells;
  for (int s = 0; s < slots; ++s)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) cells.emplace_back(s, dy * m, dx * m);
  std::set<Form> out;
  const int n = static_cast<int>(cells.size());
  auto add = [&](Form f) {
    f.emplace_back(0, 0, 0);
    f = sorted(f);
    if (slots == 2 && std::none_of(f.begin(), f.end(), [](const Point& p) { return std::get<0>(p) == 1; })) return;
    out.insert(f);
  };
  add({});
  if (max_order >= 1)
    for (int a = 0; a < n; ++a) add({cells[a]});
  if (max_order >= 2)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) add({cells[a], cells[b]});
  return {out.begin(), out.end()};
}

inline Form shift(const Form& f, int dy, int dx) {
  Form g;
  for (auto [s, y, x] : f) g.emplace_back(s, y + dy, x + dx);
  return sorted(g);
}

inline Form swap_slots(const Form& f) {
  Form g;
  for (auto [s, y, x] : f) g.emplace_back(1 - s, y, x);
  return sorted(g);
}

inline Form rotate(const Form& f, int g) {
  Form out;
  for (auto [s, y, x] : f) {
    // g = rotation count (0..3) + 4 * mirror
    int yy = y, xx = g >= 4 ? -x : x;
    for (int r = 0; r < g % 4; ++r) {
      const int t = yy;
      yy = xx;
      xx = -t;
    }
    out.emplace_back(s, yy, xx);
  }
  return sorted(out);
}

// True iff b is a translate (optionally slot-swapped) of a.
inline bool equivalent(const Form& a, const Form& b, bool allow_swap, int m) {
  if (a.size() != b.size()) return false;
  for (int swap = 0; swap <= (allow_swap ? 1 : 0); ++swap) {
    const Form base = swap ? swap_slots(a) : a;
    for (int dy = -2 * m; dy <= 2 * m; dy += m)
      for (int dx = -2 * m; dx <= 2 * m; dx += m)
        if (shift(base, dy, dx) == b) return true;
  }
  return false;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::size_t roots() {
    std::set<std::size_t> r;
    for (std::size_t i = 0; i < parent.size(); ++i) r.insert(find(i));
    return r.size();
  }
};

// Number of equivalence classes per order (index = order).
inline std::map<std::size_t, std::size_t> class_counts(int m, int max_order, int slots) {
  const auto forms = all_forms(m, max_order, slots);
  UnionFind uf(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i)
    for (std::size_t j = i + 1; j < forms.size(); ++j)
      if (equivalent(forms[i], forms[j], slots == 2, m)) uf.unite(i, j);
  std::map<std::size_t, std::set<std::size_t>> roots;
  for (std::size_t i = 0; i < forms.size(); ++i) roots[forms[i].size() - 1].insert(uf.find(i));
  std::map<std::size_t, std::size_t> out;
  for (auto& [order, r] : roots) out[order] = r.size();
  return out;
}

// Number of orbits under translation (+ swap) and the 8 rotations/reflections.
inline std::size_t orbit_count(int m, int max_order, int slots) {
  const auto forms = all_forms(m, max_order, slots);
  UnionFind uf(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i)
    for (std::size_t j = 0; j < forms.size(); ++j)
      for (int g = 0; g < 8; ++g)
        if (equivalent(rotate(forms[i], g), forms[j], slots == 2, m)) uf.unite(i, j);
  return uf.roots();
}

// Literal product-sum: for each distinct translate of the mask that has a
// point at the reference and stays inside [-m, m]^2, sum over every reference
// pixel whose (2m+1)^2 window fits the patch; average over translates.
inline double product_sum(const std::vector<const muchlac::MultibandRaster*>& slot_sources,
                          const std::vector<std::size_t>& slot_bands, const Form& mask, int m) {
  std::set<Form> placements;
  for (int dy = -2 * m; dy <= 2 * m; ++dy)
    for (int dx = -2 * m; dx <= 2 * m; ++dx) {
      const Form t = shift(mask, dy, dx);
      bool has_origin = false, inside = true;
      for (auto [s, y, x] : t) {
        has_origin |= (y == 0 && x == 0);
        inside &= std::abs(y) <= m && std::abs(x) <= m;
      }
      if (has_origin && inside) placements.insert(t);
    }
  const auto& ref = *slot_sources[0];
  const int w = static_cast<int>(ref.width), h = static_cast<int>(ref.height);
  double total = 0.0;
  for (const auto& pl : placements) {
    double sum = 0.0;
    for (int y = m; y < h - m; ++y) {
      for (int x = m; x < w - m; ++x) {
        double prod = 1.0;
        for (auto [s, dy, dx] : pl)
          prod *= slot_sources[s]->at(slot_bands[s], static_cast<std::size_t>(x + dx), static_cast<std::size_t>(y + dy));
        sum += prod;
      }
    }
    total += sum;
  }
  return total / static_cast<double>(placements.size());
}

// Co-occurrence counts via a map of level pairs, then normalized dense matrix.
inline std::vector<double> glcm(const muchlac::MultibandRaster& r, std::size_t band, int dx, int dy, std::size_t levels,
                                bool symmetric) {
  std::map<std::pair<std::size_t, std::size_t>, double> counts;
  double n = 0;
  auto level = [&](double v) {
    std::size_t q = 0;
    while (q + 1 < levels && v >= static_cast<double>(q + 1) / static_cast<double>(levels)) ++q;
    return q;
  };
  for (int y = 0; y < static_cast<int>(r.height); ++y)
    for (int x = 0; x < static_cast<int>(r.width); ++x) {
      const int x2 = x + dx, y2 = y + dy;
      if (x2 < 0 || y2 < 0 || x2 >= static_cast<int>(r.width) || y2 >= static_cast<int>(r.height)) continue;
      const auto a = level(r.at(band, x, y)), b = level(r.at(band, x2, y2));
      counts[{a, b}] += 1;
      n += 1;
      if (symmetric) {
        counts[{b, a}] += 1;
        n += 1;
      }
    }
  std::vector<double> p(levels * levels, 0.0);
  for (auto& [k, c] : counts) p[k.first * levels + k.second] = c / n;
  return p;
}

// asm, contrast, idm, entropy, correlation by direct summation with
// marginals computed first.
inline std::array<double, 5> haralick(const std::vector<double>& p, std::size_t levels) {
  std::vector<double> px(levels, 0.0), py(levels, 0.0);
  for (std::size_t i = 0; i < levels; ++i)
    for (std::size_t j = 0; j < levels; ++j) {
      px[i] += p[i * levels + j];
      py[j] += p[i * levels + j];
    }
  double mx = 0, my = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < levels; ++i) {
    mx += i * px[i];
    my += i * py[i];
  }
  for (std::size_t i = 0; i < levels; ++i) {
    vx += (i - mx) * (i - mx) * px[i];
    vy += (i - my) * (i - my) * py[i];
  }
  std::array<double, 5> out{};
  double cov = 0;
  for (std::size_t i = 0; i < levels; ++i)
    for (std::size_t j = 0; j < levels; ++j) {
      const double v = p[i * levels + j];
      const double d = static_cast<double>(i) - static_cast<double>(j);
      out[0] += v * v;
      out[1] += d * d * v;
      out[2] += v / (1 + d * d);
      if (v > 0) out[3] += -v * std::log(v) / std::log(2.0);
      cov += (i - mx) * (j - my) * v;
    }
  out[4] = (vx > 0 && vy > 0) ? cov / std::sqrt(vx * vy) : 0.0;
  return out;
}

}  // namespace oracle
