#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/bitframe.hpp"
#include "cascade/interval.hpp"

namespace cascade {

/// Stored node colors. Green (the current search target) is never stored;
/// it is the return value of find_unvisited_sibling / multi_error_frontier.
enum class NodeColor : std::uint8_t {
  Neutral = 0,
  SyndromeKnown = 1,  // red
  ErrorLeaf = 2,      // blue
  Compromised = 4,    // yellow
};

/// Independent color flags. A leaf may be blue and yellow at once.
class ColorSet {
 public:
  constexpr ColorSet() = default;
  constexpr explicit ColorSet(std::uint8_t bits) : bits_(bits & 7U) {}

  constexpr bool has(NodeColor c) const noexcept {
    return (bits_ & static_cast<std::uint8_t>(c)) != 0;
  }
  constexpr bool neutral() const noexcept { return bits_ == 0; }
  constexpr ColorSet with(NodeColor c) const noexcept {
    return ColorSet(static_cast<std::uint8_t>(bits_ | static_cast<std::uint8_t>(c)));
  }
  constexpr ColorSet operator|(ColorSet o) const noexcept { return ColorSet(bits_ | o.bits_); }
  constexpr bool contains(ColorSet o) const noexcept { return (bits_ & o.bits_) == o.bits_; }
  constexpr std::uint8_t bits() const noexcept { return bits_; }

  friend constexpr bool operator==(ColorSet, ColorSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

struct ParityNode;
using NodePtr = std::shared_ptr<const ParityNode>;

/// Immutable tree node. Either a leaf (no children) or split at
/// split_point(interval) into exactly two children.
struct ParityNode {
  Interval interval;
  ColorSet colors;
  std::optional<Bit> syndrome;
  std::optional<std::uint32_t> syndrome_round;
  NodePtr left;
  NodePtr right;

  bool is_leaf() const noexcept { return !left; }
  bool syndrome_known() const noexcept { return colors.has(NodeColor::SyndromeKnown); }
};

/// Persistent 4-colored binary tree over one block of a round's permuted
/// frame. Every operation returns a new tree; unchanged subtrees are shared.
class ColoredTree {
 public:
  ColoredTree(NodePtr root, std::uint32_t round);

  const ParityNode& root() const noexcept { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  std::uint32_t round() const noexcept { return round_; }
  const Interval& interval() const noexcept { return root_->interval; }

  /// Materialized node with exactly this interval, or nullptr.
  const ParityNode* locate(const Interval& iv) const;

  /// Root-to-deepest-materialized-node path covering `position`.
  std::vector<const ParityNode*> path_to(std::size_t position) const;

  std::size_t node_count() const;

  /// Pre-order, left before right.
  void for_each(const std::function<void(const ParityNode&, std::size_t depth)>& fn) const;

 private:
  NodePtr root_;
  std::uint32_t round_;
};

/// Single Neutral, unexpanded root. Throws StructuralError on an empty interval.
ColoredTree build_tree(const Interval& interval, std::uint32_t round);

/// Colors the node for `interval` SyndromeKnown, creating it (and its
/// sibling) on demand. A newer round stamp replaces the stored value; an
/// older one is ignored; an equal stamp must carry the same value.
ColoredTree set_syndrome(const ColoredTree& tree, const Interval& interval, Bit value,
                         std::uint32_t round);

ColoredTree mark_error_leaf(const ColoredTree& tree, std::size_t position);
ColoredTree mark_compromised(const ColoredTree& tree, std::size_t position);

/// Node-wise union of structure and colors. Requires identical root intervals.
ColoredTree merge_trees(const ColoredTree& a, const ColoredTree& b);

/// Walks from the deepest materialized node covering `position` toward the
/// root and returns the first sibling that is not SyndromeKnown.
std::optional<Interval> find_unvisited_sibling(const ColoredTree& tree, std::size_t position);

/// Union over all positions of the per-path walk of find_unvisited_sibling,
/// where siblings that themselves cover another input position are skipped
/// (they lie on the union of paths). Result is sorted, disjoint, and no
/// element is an ancestor of another.
std::vector<Interval> multi_error_frontier(const ColoredTree& tree,
                                           std::span<const std::size_t> positions);

/// Stored syndrome of the node for `interval`, if that node is red.
std::optional<Bit> known_syndrome(const ColoredTree& tree, const Interval& interval);

/// Syndrome of `node` if red, else the XOR of both children when both are
/// derivable this way.
std::optional<Bit> derive_from_below(const ParityNode& node);

/// Textual dump, one node per line, pre-order, two spaces of indent per level:
///   [lo,hi) RBY s=<bit>@<round>
/// The flag field has R, B, Y or '-' in fixed positions; a node without a
/// syndrome prints "s=?".
std::string dump_tree(const ColoredTree& tree);

}  // namespace cascade
