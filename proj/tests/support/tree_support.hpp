#pragma once

#include <utility>

#include "cascade/parity_tree.hpp"
#include "cascade/rng.hpp"
#include "oracles.hpp"

// Random colored trees and a flat reference model for them.
namespace cascade::tree_support {

using oracle::FlatTree;
using Key = std::pair<std::size_t, std::size_t>;

inline FlatTree flatten(const ColoredTree& t) {
  FlatTree out;
  t.for_each([&](const ParityNode& n, std::size_t) {
    oracle::FlatNode f;
    f.colors = n.colors.bits();
    if (n.syndrome) f.syndrome = *n.syndrome;
    f.round = n.syndrome_round;
    out[{n.interval.lo, n.interval.hi}] = f;
  });
  return out;
}

inline bool same_facts(const oracle::FlatNode& a, const oracle::FlatNode& b) {
  return a.colors == b.colors && a.syndrome == b.syndrome && a.round == b.round;
}

inline bool same(const FlatTree& a, const FlatTree& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it == b.end() || !same_facts(v, it->second)) return false;
  }
  return true;
}

// Syndrome value fixed by (interval, round) so random trees never disagree
// on an equal stamp.
inline Bit fixed_value(const Interval& iv, std::uint32_t round) {
  return static_cast<Bit>(mix64(iv.lo * 1315423911ULL + iv.hi * 2654435761ULL + round) & 1);
}

inline Interval random_lattice_node(const Interval& root, SeededRng& rng) {
  Interval cur = root;
  while (cur.size() > 1 && rng.uniform(3) != 0) cur = rng.next_bit() ? left_half(cur) : right_half(cur);
  return cur;
}

inline ColoredTree random_tree(const Interval& root, SeededRng& rng, std::size_t ops) {
  ColoredTree t = build_tree(root, 0);
  for (std::size_t i = 0; i < ops; ++i) {
    const std::size_t pos = root.lo + rng.uniform(root.size());
    switch (rng.uniform(4)) {
      case 0:
        t = mark_error_leaf(t, pos);
        break;
      case 1:
        t = mark_compromised(t, pos);
        break;
      default: {
        const Interval iv = random_lattice_node(root, rng);
        const auto round = static_cast<std::uint32_t>(rng.uniform(4));
        t = set_syndrome(t, iv, fixed_value(iv, round), round);
      }
    }
  }
  return t;
}

inline FlatTree oracle_merge(const FlatTree& a, const FlatTree& b) {
  FlatTree out = a;
  for (const auto& [k, v] : b) {
    auto [it, inserted] = out.emplace(k, v);
    if (inserted) continue;
    it->second.colors |= v.colors;
    if (v.syndrome && (!it->second.syndrome || *v.round > *it->second.round)) {
      it->second.syndrome = v.syndrome;
      it->second.round = v.round;
    }
  }
  return out;
}

}  // namespace cascade::tree_support
