#pragma once

// Canonical HLAC / MUCHLAC mask patterns and their dihedral (D4) orbits.
//
// A mask is a multiset of points (slot, dy, dx). At displacement distance m
// the offsets live on the lattice m*{-1,0,1}^2 around a reference point.
// HLAC masks use slot 0 only; MUCHLAC masks use two slots and must touch
// both. Masks are equivalent under common translation (and, for MUCHLAC,
// swapping slot labels); each class is stored as its canonical form: the
// smallest sorted point tuple among equivalent forms that have a slot-0 point
// at (0,0) and every offset inside the (2m+1)x(2m+1) window.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace muchlac {

enum class MaskKind { hlac, muchlac };

inline const char* to_string(MaskKind k) { return k == MaskKind::hlac ? "hlac" : "muchlac"; }

struct MaskPoint {
  int slot = 0;
  int dy = 0;
  int dx = 0;

  auto operator<=>(const MaskPoint&) const = default;
};

using MaskPoints = std::vector<MaskPoint>;

struct MaskPattern {
  MaskKind kind = MaskKind::hlac;
  int m = 1;
  MaskPoints points;  // sorted

  std::size_t order() const { return points.size() - 1; }

  bool operator==(const MaskPattern&) const = default;
};

// Total order used for enumeration output: (order, sorted point tuple).
inline bool canonical_less(const MaskPattern& a, const MaskPattern& b) {
  if (a.points.size() != b.points.size()) return a.points.size() < b.points.size();
  return a.points < b.points;
}

// Homogeneity degree of the mask's monomial (points counted with multiplicity).
inline std::size_t mask_total_degree(const MaskPattern& mask) { return mask.points.size(); }

struct MaskGroup {
  std::size_t id = 0;
  std::vector<std::size_t> members;  // indices into the enumerated mask list
  // Distinct translation classes (slots fixed) of the lead member's D4 images.
  // Summing responses over these gives a rotation/reflection invariant value
  // for any ordered channel assignment.
  std::vector<MaskPoints> terms;
};

namespace masks_detail {

inline bool in_window(const MaskPoints& pts, int radius) {
  return std::all_of(pts.begin(), pts.end(),
                     [radius](const MaskPoint& p) { return std::abs(p.dy) <= radius && std::abs(p.dx) <= radius; });
}

inline MaskPoints translated(const MaskPoints& pts, int dy, int dx) {
  MaskPoints out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.slot, p.dy + dy, p.dx + dx});
  std::sort(out.begin(), out.end());
  return out;
}

inline MaskPoints swapped(const MaskPoints& pts) {
  MaskPoints out;
  for (const auto& p : pts) out.push_back({1 - p.slot, p.dy, p.dx});
  std::sort(out.begin(), out.end());
  return out;
}

inline bool has_reference(const MaskPoints& pts) {
  return std::binary_search(pts.begin(), pts.end(), MaskPoint{0, 0, 0});
}

// The 8 symmetries of the square acting on (dy, dx).
inline MaskPoint d4_apply(int g, const MaskPoint& p) {
  const int y = p.dy, x = p.dx;
  switch (g) {
    case 0: return {p.slot, y, x};
    case 1: return {p.slot, x, -y};
    case 2: return {p.slot, -y, -x};
    case 3: return {p.slot, -x, y};
    case 4: return {p.slot, y, -x};
    case 5: return {p.slot, -y, x};
    case 6: return {p.slot, x, y};
    default: return {p.slot, -x, -y};
  }
}

inline MaskPoints d4_apply(int g, const MaskPoints& pts) {
  MaskPoints out;
  for (const auto& p : pts) out.push_back(d4_apply(g, p));
  std::sort(out.begin(), out.end());
  return out;
}

// All multisets {reference} + k lattice points drawn from `slots` slots.
inline void add_product_forms(std::vector<MaskPoints>& out, std::size_t slots, std::size_t k, int m,
                              MaskPoints& chosen, std::size_t start) {
  if (chosen.size() == k) {
    MaskPoints all = chosen;
    all.push_back({0, 0, 0});
    std::sort(all.begin(), all.end());
    out.push_back(std::move(all));
    return;
  }
  const std::size_t per_slot = 9;
  for (std::size_t i = start; i < slots * per_slot; ++i) {
    const int slot = static_cast<int>(i / per_slot);
    const int cell = static_cast<int>(i % per_slot);
    chosen.push_back({slot, (cell / 3 - 1) * m, (cell % 3 - 1) * m});
    add_product_forms(out, slots, k, m, chosen, i);
    chosen.pop_back();
  }
}

}  // namespace masks_detail

// All in-window placements of a mask: translates that put some point at the
// reference offset (0,0) and keep every point within [-m, m]^2. Slots are not
// swapped. Sorted and distinct.
inline std::vector<MaskPoints> mask_placements(const MaskPoints& pts, int m) {
  std::set<MaskPoints> out;
  for (const auto& p : pts) {
    auto t = masks_detail::translated(pts, -p.dy, -p.dx);
    if (masks_detail::in_window(t, m)) out.insert(std::move(t));
  }
  return {out.begin(), out.end()};
}

inline MaskPoints canonical_points(const MaskPoints& pts, int m, MaskKind kind) {
  if (pts.empty()) throw std::invalid_argument("mask has no points");
  std::vector<MaskPoints> candidates = mask_placements(pts, m);
  if (kind == MaskKind::muchlac) {
    auto other = mask_placements(masks_detail::swapped(pts), m);
    candidates.insert(candidates.end(), other.begin(), other.end());
  }
  const MaskPoints* best = nullptr;
  for (const auto& c : candidates) {
    if (!masks_detail::has_reference(c)) continue;
    if (best == nullptr || c < *best) best = &c;
  }
  if (best == nullptr) throw std::invalid_argument("mask does not fit the displacement window");
  return *best;
}

inline MaskPattern canonicalize(const MaskPattern& mask) {
  return MaskPattern{mask.kind, mask.m, canonical_points(mask.points, mask.m, mask.kind)};
}

inline std::vector<MaskPattern> enumerate_hlac_masks(int m, int max_order = 2) {
  if (m < 1) throw std::invalid_argument("displacement distance m must be >= 1");
  if (max_order < 0 || max_order > 2)
    throw std::invalid_argument("max_order must be in 0..2 (higher orders are not supported)");
  std::set<MaskPoints> classes;
  for (int k = 0; k <= max_order; ++k) {
    std::vector<MaskPoints> forms;
    MaskPoints chosen;
    masks_detail::add_product_forms(forms, 1, static_cast<std::size_t>(k), m, chosen, 0);
    for (const auto& f : forms) classes.insert(canonical_points(f, m, MaskKind::hlac));
  }
  std::vector<MaskPattern> out;
  for (const auto& c : classes) out.push_back({MaskKind::hlac, m, c});
  std::stable_sort(out.begin(), out.end(), canonical_less);
  return out;
}

inline std::vector<MaskPattern> enumerate_muchlac_masks(int m, int max_order = 2, int n_slots = 2) {
  if (m < 1) throw std::invalid_argument("displacement distance m must be >= 1");
  if (n_slots != 2) throw std::invalid_argument("only two channel slots are supported");
  if (max_order < 1 || max_order > 2)
    throw std::invalid_argument("cross-channel masks need max_order in 1..2");
  std::set<MaskPoints> classes;
  for (int k = 1; k <= max_order; ++k) {
    std::vector<MaskPoints> forms;
    MaskPoints chosen;
    masks_detail::add_product_forms(forms, 2, static_cast<std::size_t>(k), m, chosen, 0);
    for (const auto& f : forms) {
      const bool touches_b = std::any_of(f.begin(), f.end(), [](const MaskPoint& p) { return p.slot == 1; });
      if (touches_b) classes.insert(canonical_points(f, m, MaskKind::muchlac));
    }
  }
  std::vector<MaskPattern> out;
  for (const auto& c : classes) out.push_back({MaskKind::muchlac, m, c});
  std::stable_sort(out.begin(), out.end(), canonical_less);
  return out;
}

inline std::vector<MaskPattern> enumerate_masks(MaskKind kind, int m, int max_order = 2) {
  return kind == MaskKind::hlac ? enumerate_hlac_masks(m, max_order) : enumerate_muchlac_masks(m, max_order);
}

// Applies one of the 8 dihedral transforms to the offsets (slots unchanged)
// and re-canonicalizes.
inline MaskPattern d4_transform(const MaskPattern& mask, int g) {
  if (g < 0 || g > 7) throw std::invalid_argument("dihedral transform index must be in 0..7");
  return canonicalize(MaskPattern{mask.kind, mask.m, masks_detail::d4_apply(g, mask.points)});
}

// Partitions masks into D4 orbits. Groups are numbered by their smallest
// member index.
inline std::vector<MaskGroup> d4_orbits(const std::vector<MaskPattern>& masks) {
  if (masks.empty()) return {};
  std::map<MaskPoints, std::size_t> index;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto& mk = masks[i];
    if (mk.kind != masks.front().kind || mk.m != masks.front().m)
      throw std::invalid_argument("masks come from different enumerations");
    if (canonicalize(mk) != mk) throw std::invalid_argument("mask " + std::to_string(i) + " is not canonical");
    if (!index.emplace(mk.points, i).second) throw std::invalid_argument("duplicate mask in list");
  }

  std::vector<std::size_t> parent(masks.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < masks.size(); ++i) {
    for (int g = 1; g < 8; ++g) {
      const auto image = d4_transform(masks[i], g);
      const auto it = index.find(image.points);
      if (it == index.end()) throw std::invalid_argument("mask list is not closed under D4");
      const auto a = find(i), b = find(it->second);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  std::map<std::size_t, std::size_t> group_of_root;
  std::vector<MaskGroup> groups;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const auto root = find(i);
    auto [it, fresh] = group_of_root.emplace(root, groups.size());
    if (fresh) groups.push_back(MaskGroup{groups.size(), {}, {}});
    groups[it->second].members.push_back(i);
  }
  for (auto& group : groups) {
    const auto& lead = masks[group.members.front()];
    std::set<MaskPoints> terms;
    for (int g = 0; g < 8; ++g) {
      const auto image = masks_detail::d4_apply(g, lead.points);
      terms.insert(mask_placements(image, lead.m).front());
    }
    group.terms.assign(terms.begin(), terms.end());
  }
  return groups;
}

// Orbit id per mask index.
inline std::vector<std::size_t> orbit_ids(const std::vector<MaskGroup>& groups, std::size_t mask_count) {
  std::vector<std::size_t> ids(mask_count, 0);
  for (const auto& g : groups)
    for (auto i : g.members) ids.at(i) = g.id;
  return ids;
}

// masks.json interchange format used by `masks dump`.
inline nlohmann::ordered_json masks_to_json(const std::vector<MaskPattern>& masks, const std::vector<MaskGroup>& groups) {
  nlohmann::ordered_json j;
  j["magic"] = "MASKS1";
  j["kind"] = masks.empty() ? "hlac" : to_string(masks.front().kind);
  j["m"] = masks.empty() ? 0 : masks.front().m;
  j["count"] = masks.size();
  std::map<std::size_t, std::size_t> per_order;
  for (const auto& mk : masks) ++per_order[mk.order()];
  auto& counts = j["count_by_order"] = nlohmann::ordered_json::object();
  for (auto [order, n] : per_order) counts[std::to_string(order)] = n;
  j["orbit_count"] = groups.size();
  const auto ids = orbit_ids(groups, masks.size());
  auto& arr = j["masks"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < masks.size(); ++i) {
    nlohmann::ordered_json e;
    e["index"] = i;
    e["order"] = masks[i].order();
    e["degree"] = mask_total_degree(masks[i]);
    e["orbit"] = ids[i];
    auto& pts = e["points"] = nlohmann::ordered_json::array();
    for (const auto& p : masks[i].points) pts.push_back({{"slot", p.slot}, {"dx", p.dx}, {"dy", p.dy}});
    arr.push_back(std::move(e));
  }
  auto& orbits = j["orbits"] = nlohmann::ordered_json::array();
  for (const auto& g : groups) orbits.push_back({{"id", g.id}, {"members", g.members}});
  return j;
}

}  // namespace muchlac
