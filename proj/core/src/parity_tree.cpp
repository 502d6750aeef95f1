#include "cascade/parity_tree.hpp"

#include <algorithm>
#include <sstream>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

NodePtr make_leaf(const Interval& iv) {
  auto n = std::make_shared<ParityNode>();
  n->interval = iv;
  return n;
}

std::shared_ptr<ParityNode> clone(const ParityNode& n) { return std::make_shared<ParityNode>(n); }

// Copies `node` and guarantees it has children.
std::shared_ptr<ParityNode> expanded_copy(const ParityNode& node) {
  auto copy = clone(node);
  if (copy->is_leaf()) {
    copy->left = make_leaf(left_half(node.interval));
    copy->right = make_leaf(right_half(node.interval));
  }
  return copy;
}

void apply_syndrome(ParityNode& node, Bit value, std::uint32_t round) {
  if (node.syndrome) {
    if (*node.syndrome_round > round) return;
    if (*node.syndrome_round == round && *node.syndrome != value) {
      std::ostringstream msg;
      msg << "conflicting syndromes for " << node.interval << " at round " << round;
      throw StructuralError(msg.str());
    }
  }
  node.syndrome = value;
  node.syndrome_round = round;
  node.colors = node.colors.with(NodeColor::SyndromeKnown);
}

NodePtr set_rec(const ParityNode& node, const Interval& target, Bit value, std::uint32_t round) {
  if (node.interval == target) {
    auto copy = clone(node);
    apply_syndrome(*copy, value, round);
    return copy;
  }
  if (node.interval.size() <= 1 || !node.interval.contains(target)) {
    std::ostringstream msg;
    msg << "interval " << target << " is not on the split lattice of " << node.interval;
    throw StructuralError(msg.str());
  }
  const std::size_t mid = split_point(node.interval);
  if (target.lo < mid && target.hi > mid) {
    std::ostringstream msg;
    msg << "interval " << target << " straddles split point " << mid << " of " << node.interval;
    throw StructuralError(msg.str());
  }
  auto copy = expanded_copy(node);
  if (target.hi <= mid) {
    copy->left = set_rec(*copy->left, target, value, round);
  } else {
    copy->right = set_rec(*copy->right, target, value, round);
  }
  return copy;
}

NodePtr color_leaf_rec(const ParityNode& node, std::size_t pos, NodeColor color) {
  if (node.interval.size() == 1) {
    auto copy = clone(node);
    copy->colors = copy->colors.with(color);
    return copy;
  }
  auto copy = expanded_copy(node);
  if (pos < split_point(node.interval)) {
    copy->left = color_leaf_rec(*copy->left, pos, color);
  } else {
    copy->right = color_leaf_rec(*copy->right, pos, color);
  }
  return copy;
}

ColoredTree color_leaf(const ColoredTree& tree, std::size_t pos, NodeColor color) {
  if (!tree.interval().contains(pos)) {
    std::ostringstream msg;
    msg << "position " << pos << " outside tree " << tree.interval();
    throw StructuralError(msg.str());
  }
  return ColoredTree(color_leaf_rec(tree.root(), pos, color), tree.round());
}

NodePtr merge_rec(const NodePtr& a, const NodePtr& b) {
  if (a == b || !b) return a;
  if (!a) return b;
  auto out = clone(*a);
  out->colors = a->colors | b->colors;
  if (b->syndrome) {
    if (!a->syndrome || *b->syndrome_round > *a->syndrome_round) {
      out->syndrome = b->syndrome;
      out->syndrome_round = b->syndrome_round;
    } else if (*b->syndrome_round == *a->syndrome_round && *b->syndrome != *a->syndrome) {
      std::ostringstream msg;
      msg << "merge: conflicting syndromes for " << a->interval << " at round "
          << *a->syndrome_round;
      throw StructuralError(msg.str());
    }
  }
  out->left = merge_rec(a->left, b->left);
  out->right = merge_rec(a->right, b->right);
  return out;
}

}  // namespace

ColoredTree::ColoredTree(NodePtr root, std::uint32_t round) : root_(std::move(root)), round_(round) {
  if (!root_) throw StructuralError("tree root must not be null");
}

const ParityNode* ColoredTree::locate(const Interval& iv) const {
  const ParityNode* node = root_.get();
  while (node) {
    if (node->interval == iv) return node;
    if (node->is_leaf() || !node->interval.contains(iv)) return nullptr;
    node = iv.hi <= split_point(node->interval) ? node->left.get() : node->right.get();
    if (node && !node->interval.contains(iv)) return nullptr;
  }
  return nullptr;
}

std::vector<const ParityNode*> ColoredTree::path_to(std::size_t position) const {
  std::vector<const ParityNode*> path;
  if (!interval().contains(position)) return path;
  const ParityNode* node = root_.get();
  while (node) {
    path.push_back(node);
    if (node->is_leaf()) break;
    node = position < split_point(node->interval) ? node->left.get() : node->right.get();
  }
  return path;
}

std::size_t ColoredTree::node_count() const {
  std::size_t count = 0;
  for_each([&](const ParityNode&, std::size_t) { ++count; });
  return count;
}

void ColoredTree::for_each(
    const std::function<void(const ParityNode&, std::size_t depth)>& fn) const {
  std::vector<std::pair<const ParityNode*, std::size_t>> stack{{root_.get(), 0}};
  while (!stack.empty()) {
    auto [node, depth] = stack.back();
    stack.pop_back();
    fn(*node, depth);
    if (!node->is_leaf()) {
      stack.emplace_back(node->right.get(), depth + 1);
      stack.emplace_back(node->left.get(), depth + 1);
    }
  }
}

ColoredTree build_tree(const Interval& interval, std::uint32_t round) {
  if (interval.empty()) throw StructuralError("cannot build a tree over an empty interval");
  return ColoredTree(make_leaf(interval), round);
}

ColoredTree set_syndrome(const ColoredTree& tree, const Interval& interval, Bit value,
                         std::uint32_t round) {
  if (value > 1) throw StructuralError("syndrome must be 0 or 1");
  return ColoredTree(set_rec(tree.root(), interval, value, round), tree.round());
}

ColoredTree mark_error_leaf(const ColoredTree& tree, std::size_t position) {
  return color_leaf(tree, position, NodeColor::ErrorLeaf);
}

ColoredTree mark_compromised(const ColoredTree& tree, std::size_t position) {
  return color_leaf(tree, position, NodeColor::Compromised);
}

ColoredTree merge_trees(const ColoredTree& a, const ColoredTree& b) {
  if (a.interval() != b.interval()) {
    std::ostringstream msg;
    msg << "merge_trees: root intervals differ " << a.interval() << " vs " << b.interval();
    throw StructuralError(msg.str());
  }
  return ColoredTree(merge_rec(a.root_ptr(), b.root_ptr()), std::min(a.round(), b.round()));
}

std::optional<Interval> find_unvisited_sibling(const ColoredTree& tree, std::size_t position) {
  if (!tree.interval().contains(position)) {
    std::ostringstream msg;
    msg << "position " << position << " outside tree " << tree.interval();
    throw StructuralError(msg.str());
  }
  const auto path = tree.path_to(position);
  for (std::size_t i = path.size(); i-- > 1;) {
    const ParityNode* parent = path[i - 1];
    const ParityNode* sibling = parent->left.get() == path[i] ? parent->right.get() : parent->left.get();
    if (!sibling->syndrome_known()) return sibling->interval;
  }
  return std::nullopt;
}

std::vector<Interval> multi_error_frontier(const ColoredTree& tree,
                                           std::span<const std::size_t> positions) {
  for (std::size_t p : positions) {
    if (!tree.interval().contains(p)) {
      std::ostringstream msg;
      msg << "position " << p << " outside tree " << tree.interval();
      throw StructuralError(msg.str());
    }
  }
  std::vector<std::size_t> sorted(positions.begin(), positions.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  auto covers_input = [&](const Interval& iv) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), iv.lo);
    return it != sorted.end() && *it < iv.hi;
  };

  std::vector<Interval> frontier;
  for (std::size_t p : sorted) {
    const auto path = tree.path_to(p);
    for (std::size_t i = path.size(); i-- > 1;) {
      const ParityNode* parent = path[i - 1];
      const ParityNode* sibling =
          parent->left.get() == path[i] ? parent->right.get() : parent->left.get();
      if (covers_input(sibling->interval)) continue;
      if (!sibling->syndrome_known()) {
        frontier.push_back(sibling->interval);
        break;
      }
    }
  }
  std::sort(frontier.begin(), frontier.end());
  frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
  return frontier;
}

std::optional<Bit> known_syndrome(const ColoredTree& tree, const Interval& interval) {
  const ParityNode* node = tree.locate(interval);
  if (node && node->syndrome_known()) return node->syndrome;
  return std::nullopt;
}

std::optional<Bit> derive_from_below(const ParityNode& node) {
  if (node.syndrome_known()) return node.syndrome;
  if (node.is_leaf()) return std::nullopt;
  const auto l = derive_from_below(*node.left);
  if (!l) return std::nullopt;
  const auto r = derive_from_below(*node.right);
  if (!r) return std::nullopt;
  return static_cast<Bit>(*l ^ *r);
}

std::string dump_tree(const ColoredTree& tree) {
  std::ostringstream out;
  tree.for_each([&](const ParityNode& n, std::size_t depth) {
    out << std::string(depth * 2, ' ') << n.interval << ' '
        << (n.colors.has(NodeColor::SyndromeKnown) ? 'R' : '-')
        << (n.colors.has(NodeColor::ErrorLeaf) ? 'B' : '-')
        << (n.colors.has(NodeColor::Compromised) ? 'Y' : '-') << ' ';
    if (n.syndrome) {
      out << "s=" << int(*n.syndrome) << '@' << *n.syndrome_round;
    } else {
      out << "s=?";
    }
    out << '\n';
  });
  return out.str();
}

}  // namespace cascade
