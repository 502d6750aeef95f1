#include "cascade/engine.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <type_traits>

#include "cascade/errors.hpp"
#include "cascade/rng.hpp"

namespace cascade {

namespace {

__extension__ using u128 = unsigned __int128;

constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

std::uint64_t mulmod61(std::uint64_t a, std::uint64_t b) {
  const u128 p = static_cast<u128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(p & kMersenne61);
  std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
  std::uint64_t r = lo + hi;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

std::uint64_t addmod61(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

Message out(Payload payload) { return Message{0, std::move(payload)}; }

[[noreturn]] void unexpected(const char* who, const Message& m, const char* state) {
  std::ostringstream s;
  s << who << ": unexpected " << message_name(m.payload) << " while " << state;
  throw ProtocolError(s.str());
}

bool should_stop(const SessionConfig& config, std::span<const std::size_t> history) {
  return history.size() >= kMaxRounds || should_terminate(config.break_condition, history);
}

}  // namespace

void validate(const SessionConfig& config) {
  if (config.frame_length == 0) throw ConfigError("frame_length must be positive");
  validate_schedule(config.schedule);
  validate_break(config.break_condition);
}

InitMsg to_init(const SessionConfig& c) {
  return InitMsg{c.frame_length, c.schedule,    c.break_condition, c.permutation_kind,
                 c.seed,         c.aggregation, c.parity_reuse};
}

std::uint64_t frame_fingerprint(const BitFrame& frame, std::uint64_t seed) {
  const std::uint64_t r = 1 + mix64(seed ^ 0x5CA1AB1EULL) % (kMersenne61 - 1);
  std::uint64_t h = frame.size() % kMersenne61;
  const auto bits = frame.bits();
  for (std::size_t base = 0; base < bits.size(); base += 32) {
    std::uint64_t chunk = 0;
    const std::size_t end = std::min(bits.size(), base + 32);
    for (std::size_t i = base; i < end; ++i) chunk |= std::uint64_t{bits[i]} << (i - base);
    h = addmod61(mulmod61(h, r), chunk);
  }
  return h;
}

RoundLayout make_round_layout(const SessionConfig& config, std::size_t round,
                              std::span<const std::size_t> history) {
  const SeededRng rng(config.seed);
  RoundLayout layout;
  layout.permutation = gen_round_permutation(config.permutation_kind, config.frame_length, round, rng);
  layout.inverse = invert_permutation(layout.permutation);
  layout.plan = plan_round(config.schedule, round, config.frame_length, history);
  return layout;
}

// ---------------------------------------------------------------------------
// Initiator

InitiatorSession::InitiatorSession(SessionConfig config, BitFrame frame)
    : config_(std::move(config)), frame_(std::move(frame)) {
  validate(config_);
  if (frame_.size() != config_.frame_length) throw ConfigError("frame length does not match config");
}

std::vector<Message> InitiatorSession::start() {
  if (state_ != State::Idle) throw ProtocolError("initiator: already started");
  state_ = State::AwaitReady;
  return {out(to_init(config_))};
}

Message InitiatorSession::begin_round() {
  const auto r = static_cast<std::uint32_t>(rounds_.size());
  Round round{make_round_layout(config_, r, history_), {}};
  const BitFrame permuted = apply_permutation(frame_, round.layout.permutation);
  round.prefix.resize(permuted.size() + 1, 0);
  for (std::size_t i = 0; i < permuted.size(); ++i) round.prefix[i + 1] = round.prefix[i] ^ permuted.at(i);

  BlockParitiesMsg msg{r, {}};
  for (const auto& block : round.layout.plan.block_intervals) {
    msg.parities.push_back(round.prefix[block.hi] ^ round.prefix[block.lo]);
  }
  disclosed_ += msg.parities.size();
  rounds_.push_back(std::move(round));
  state_ = State::InRound;
  return out(std::move(msg));
}

Bit InitiatorSession::parity_of(std::uint32_t round, const Interval& iv) const {
  if (round >= rounds_.size()) throw ProtocolError("parity query for a round that has not started");
  if (iv.empty() || iv.hi > frame_.size()) {
    std::ostringstream s;
    s << "parity query interval " << iv << " outside the frame";
    throw ProtocolError(s.str());
  }
  const auto& prefix = rounds_[round].prefix;
  return prefix[iv.hi] ^ prefix[iv.lo];
}

std::vector<Message> InitiatorSession::on_message(const Message& m) {
  return std::visit(
      [&](const auto& msg) -> std::vector<Message> {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, ResultMsg>) {
          if (state_ == State::AwaitReady) {
            if (msg.status == SessionStatus::Ready) return {begin_round()};
            state_ = State::Done;
            final_ = FinalStatus{msg.status, 0, disclosed_, 0};
            return {};
          }
          if (state_ == State::AwaitResult) {
            if (msg.status != SessionStatus::Success && msg.status != SessionStatus::Failure) {
              unexpected("initiator", m, "awaiting the final result");
            }
            state_ = State::Done;
            final_ = FinalStatus{msg.status, static_cast<std::size_t>(msg.corrected), disclosed_,
                                 history_.size()};
            return {};
          }
          unexpected("initiator", m, "not expecting a result");
        } else if constexpr (std::is_same_v<T, ParityQueryMsg>) {
          if (state_ != State::InRound || msg.round + 1 != rounds_.size()) {
            unexpected("initiator", m, "not in the queried round");
          }
          ParityAnswerMsg answer{msg.round, {}};
          answer.entries.reserve(msg.intervals.size());
          for (const auto& q : msg.intervals) {
            answer.entries.push_back(AnswerEntry{q.round, q.interval, parity_of(q.round, q.interval)});
          }
          disclosed_ += answer.entries.size();
          return {out(std::move(answer))};
        } else if constexpr (std::is_same_v<T, RoundDoneMsg>) {
          if (state_ != State::InRound || msg.round + 1 != rounds_.size()) {
            unexpected("initiator", m, "not in that round");
          }
          history_.push_back(static_cast<std::size_t>(msg.corrected));
          if (should_stop(config_, history_)) {
            state_ = State::AwaitResult;
            return {out(FinalizeMsg{frame_fingerprint(frame_, config_.seed)})};
          }
          return {begin_round()};
        } else {
          unexpected("initiator", m, "acting as initiator");
        }
      },
      m.payload);
}

// ---------------------------------------------------------------------------
// Responder

ResponderSession::ParityIndex::ParityIndex(std::span<const Bit> bits) : tree_(bits.size() + 1, 0) {
  const std::size_t n = bits.size();
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] ^= bits[i - 1];
    const std::size_t j = i + (i & (~i + 1));
    if (j <= n) tree_[j] ^= tree_[i];
  }
}

void ResponderSession::ParityIndex::flip(std::size_t i) {
  for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] ^= 1;
}

Bit ResponderSession::ParityIndex::prefix(std::size_t end) const {
  Bit x = 0;
  for (std::size_t k = end; k > 0; k -= k & (~k + 1)) x ^= tree_[k];
  return x;
}

ResponderSession::ResponderSession(SessionConfig config, BitFrame frame)
    : config_(std::move(config)), frame_(std::move(frame)) {
  validate(config_);
  if (frame_.size() != config_.frame_length) throw ConfigError("frame length does not match config");
  claim_.assign(frame_.size(), 0);
}

std::vector<Message> ResponderSession::on_message(const Message& m) {
  return std::visit(
      [&](const auto& msg) -> std::vector<Message> {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, InitMsg>) {
          if (state_ != State::AwaitInit) unexpected("responder", m, "already initialized");
          return handle_init(msg);
        } else if constexpr (std::is_same_v<T, BlockParitiesMsg>) {
          if (state_ != State::AwaitRound) unexpected("responder", m, "not between rounds");
          return handle_block_parities(msg);
        } else if constexpr (std::is_same_v<T, ParityAnswerMsg>) {
          if (state_ != State::InRound || pending_.empty()) unexpected("responder", m, "no query outstanding");
          return handle_answer(msg);
        } else if constexpr (std::is_same_v<T, FinalizeMsg>) {
          if (state_ != State::AwaitFinalize) unexpected("responder", m, "rounds still running");
          return handle_finalize(msg);
        } else {
          unexpected("responder", m, "acting as responder");
        }
      },
      m.payload);
}

std::vector<Message> ResponderSession::handle_init(const InitMsg& init) {
  if (!(init == to_init(config_))) {
    state_ = State::Done;
    final_ = FinalStatus{SessionStatus::ConfigMismatch, 0, 0, 0};
    return {out(ResultMsg{SessionStatus::ConfigMismatch, 0, 0})};
  }
  state_ = State::AwaitRound;
  return {out(ResultMsg{SessionStatus::Ready, 0, 0})};
}

std::vector<Message> ResponderSession::handle_block_parities(const BlockParitiesMsg& msg) {
  const auto r = static_cast<std::uint32_t>(rounds_.size());
  if (msg.round != r) throw ProtocolError("block parities for an unexpected round");
  RoundLayout layout = make_round_layout(config_, r, history_);
  if (msg.parities.size() != layout.plan.block_intervals.size()) {
    throw ProtocolError("block parity count does not match the round plan");
  }
  const BitFrame permuted = apply_permutation(frame_, layout.permutation);
  Round round{std::move(layout), ParityIndex(permuted.bits()), {}};
  const auto& blocks = round.layout.plan.block_intervals;
  round.trees.reserve(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    round.trees.push_back(set_syndrome(build_tree(blocks[b], r), blocks[b], msg.parities[b], r));
    dirty_[{r, b}].fresh = true;
  }
  for (const auto& ev : corrections_) {
    const std::size_t j = round.layout.permutation[ev.original_position];
    auto& tree = round.trees[round.layout.block_of(j)];
    tree = set_syndrome(tree, Interval{j, j + 1}, frame_.at(ev.original_position), r);
    tree = mark_compromised(tree, j);
  }
  disclosed_ += msg.parities.size();
  rounds_.push_back(std::move(round));
  corrected_this_round_ = 0;
  state_ = State::InRound;
  return pump();
}

std::vector<Message> ResponderSession::handle_answer(const ParityAnswerMsg& msg) {
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  if (msg.round != current || msg.entries.size() != pending_.size()) {
    throw ProtocolError("parity answer does not match the outstanding query");
  }
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    Search& s = wave_[pending_[i]];
    const auto& e = msg.entries[i];
    if (e.round != s.round || e.interval != s.state.query_interval()) {
      throw ProtocolError("parity answer entry does not match the outstanding query");
    }
    apply_parity(s, e.parity, ParitySource::Disclosed);
    s.awaiting = false;
    ++disclosed_;
  }
  pending_.clear();
  return pump();
}

std::vector<Message> ResponderSession::handle_finalize(const FinalizeMsg& msg) {
  const bool ok = frame_fingerprint(frame_, config_.seed) == msg.fingerprint;
  const auto status = ok ? SessionStatus::Success : SessionStatus::Failure;
  state_ = State::Done;
  final_ = FinalStatus{status, corrections_.size(), disclosed_, history_.size()};
  return {out(ResultMsg{status, corrections_.size(), disclosed_})};
}

std::vector<Message> ResponderSession::pump() {
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  for (;;) {
    if (wave_.empty() && !plan_wave()) {
      history_.push_back(corrected_this_round_);
      state_ = should_stop(config_, history_) ? State::AwaitFinalize : State::AwaitRound;
      return {out(RoundDoneMsg{current, corrected_this_round_})};
    }
    ParityQueryMsg query{current, {}};
    if (config_.aggregation) {
      for (std::size_t i = 0; i < wave_.size(); ++i) {
        Search& s = wave_[i];
        if (!s.state.running()) continue;
        advance(s);
        if (s.state.running()) {
          s.awaiting = true;
          pending_.push_back(i);
          query.intervals.push_back(QueryEntry{s.round, s.state.query_interval()});
        }
      }
    } else {
      while (serial_cursor_ < wave_.size()) {
        Search& s = wave_[serial_cursor_];
        advance(s);
        if (s.state.running()) {
          s.awaiting = true;
          pending_.push_back(serial_cursor_);
          query.intervals.push_back(QueryEntry{s.round, s.state.query_interval()});
          break;
        }
        ++serial_cursor_;
      }
    }
    if (!query.intervals.empty()) return {out(std::move(query))};
    finish_wave();
  }
}

bool ResponderSession::mismatched(std::uint32_t round, const ParityNode& node) const {
  return node.syndrome_known() && rounds_[round].index.parity(node.interval) != *node.syndrome;
}

std::vector<ResponderSession::Target> ResponderSession::targets_full_scan(std::uint32_t round,
                                                                          std::size_t block,
                                                                          const DirtyBlock&) const {
  std::vector<Target> found;
  // Returns true when the subtree holds a mismatched red node.
  auto scan = [&](auto&& self, const ParityNode& node) -> bool {
    bool below = false;
    if (!node.is_leaf()) {
      below = self(self, *node.left);
      below = self(self, *node.right) || below;
    }
    if (below) return true;
    if (mismatched(round, node)) {
      found.push_back(Target{round, block, node.interval, node.interval, *node.syndrome});
      return true;
    }
    return false;
  };
  scan(scan, rounds_[round].trees[block].root());
  return found;
}

std::vector<ResponderSession::Target> ResponderSession::targets_along_paths(
    std::uint32_t round, std::size_t block, const DirtyBlock& d) const {
  const ColoredTree& tree = rounds_[round].trees[block];
  std::vector<const ParityNode*> nodes;
  if (d.fresh && mismatched(round, tree.root())) nodes.push_back(&tree.root());
  for (const std::size_t x : d.positions) {
    const ParityNode* deepest = nullptr;
    for (const ParityNode* n : tree.path_to(x)) {
      if (mismatched(round, *n)) deepest = n;
    }
    if (deepest) nodes.push_back(deepest);
  }
  // Lattice intervals are nested or disjoint: after sorting by (lo, -hi) an
  // ancestor is immediately followed by something it contains.
  std::sort(nodes.begin(), nodes.end(), [](const ParityNode* a, const ParityNode* b) {
    return std::tie(a->interval.lo, b->interval.hi) < std::tie(b->interval.lo, a->interval.hi);
  });
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  std::vector<Target> found;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i + 1 < nodes.size() && nodes[i]->interval.contains(nodes[i + 1]->interval)) continue;
    const ParityNode& a = *nodes[i];
    Target t{round, block, a.interval, a.interval, *a.syndrome};
    if (!a.is_leaf()) {
      std::vector<std::size_t> inside;
      for (const std::size_t x : d.positions) {
        if (a.interval.contains(x)) inside.push_back(x);
      }
      std::sort(inside.begin(), inside.end());
      inside.erase(std::unique(inside.begin(), inside.end()), inside.end());
      for (const Interval& f : multi_error_frontier(tree, inside)) {
        const bool is_left = f == a.left->interval;
        if (!is_left && f != a.right->interval) continue;
        const ParityNode& sibling = is_left ? *a.right : *a.left;
        if (!sibling.syndrome_known()) continue;
        t.start = f;
        t.start_parity = static_cast<Bit>(*a.syndrome ^ *sibling.syndrome);
        break;
      }
    }
    found.push_back(t);
  }
  return found;
}

bool ResponderSession::plan_wave() {
  std::vector<Target> candidates;
  for (auto it = dirty_.begin(); it != dirty_.end();) {
    const auto [round, block] = it->first;
    std::vector<Target> ts;
    if (!config_.parity_reuse) {
      const ParityNode& root = rounds_[round].trees[block].root();
      if (mismatched(round, root)) ts.push_back(Target{round, block, root.interval, root.interval, *root.syndrome});
    } else if (config_.aggregation) {
      ts = targets_along_paths(round, block, it->second);
    } else {
      ts = targets_full_scan(round, block, it->second);
    }
    if (ts.empty()) {
      it = dirty_.erase(it);
      continue;
    }
    candidates.insert(candidates.end(), ts.begin(), ts.end());
    ++it;
  }
  if (candidates.empty()) return false;

  std::sort(candidates.begin(), candidates.end(), [](const Target& a, const Target& b) {
    return std::make_tuple(a.node.size(), a.round, a.node.lo) < std::make_tuple(b.node.size(), b.round, b.node.lo);
  });
  ++wave_stamp_;
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  for (const Target& t : candidates) {
    const Permutation& inv = rounds_[t.round].layout.inverse;
    bool free = true;
    for (std::size_t j = t.node.lo; j < t.node.hi && free; ++j) free = claim_[inv[j]] != wave_stamp_;
    if (!free) continue;
    for (std::size_t j = t.node.lo; j < t.node.hi; ++j) claim_[inv[j]] = wave_stamp_;

    const Round& rd = rounds_[t.round];
    ColoredTree learned = build_tree(rd.trees[t.block].interval(), t.round);
    learned = set_syndrome(learned, t.start, t.start_parity, current);
    wave_.push_back(Search{t.round, t.block,
                           BinarySearch::start(t.start, rd.index.parity(t.start), t.start_parity),
                           t.start_parity, std::move(learned), false});
  }
  serial_cursor_ = 0;
  return true;
}

void ResponderSession::advance(Search& s) {
  if (!config_.parity_reuse) return;
  const ColoredTree& tree = rounds_[s.round].trees[s.block];
  while (s.state.running()) {
    const Interval iv = s.state.current_interval();
    std::optional<Bit> left;
    if (const ParityNode* n = tree.locate(left_half(iv))) left = derive_from_below(*n);
    if (!left) {
      if (const ParityNode* n = tree.locate(right_half(iv))) {
        if (const auto right = derive_from_below(*n)) left = static_cast<Bit>(s.remote_parity ^ *right);
      }
    }
    if (!left) return;
    apply_parity(s, *left, ParitySource::Reused);
  }
}

void ResponderSession::apply_parity(Search& s, Bit remote_left, ParitySource source) {
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  const Interval iv = s.state.current_interval();
  const Interval l = left_half(iv);
  const Interval r = right_half(iv);
  const Bit remote_right = static_cast<Bit>(s.remote_parity ^ remote_left);
  s.learned = set_syndrome(s.learned, l, remote_left, current);
  s.learned = set_syndrome(s.learned, r, remote_right, current);
  s.state = s.state.step(rounds_[s.round].index.parity(l), remote_left, source);
  s.remote_parity = s.state.current_interval() == l ? remote_left : remote_right;
}

void ResponderSession::finish_wave() {
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  for (Search& s : wave_) {
    const std::size_t j = s.state.position();
    const std::size_t x = rounds_[s.round].layout.inverse[j];
    s.learned = mark_error_leaf(s.learned, j);
    ColoredTree& tree = rounds_[s.round].trees[s.block];
    if (config_.aggregation) {
      tree = merge_trees(tree, s.learned);
    } else {
      s.learned.for_each([&](const ParityNode& n, std::size_t) {
        if (n.syndrome_known()) tree = set_syndrome(tree, n.interval, *n.syndrome, *n.syndrome_round);
      });
      tree = mark_error_leaf(tree, j);
    }
    frame_.flip(x);
    ++corrected_this_round_;
    corrections_.push_back(CorrectionEvent{s.round, current, x, j, s.state.disclosed_count()});
    cascade_correct(corrections_.back());
  }
  wave_.clear();
  pending_.clear();
  serial_cursor_ = 0;
  if (corrections_.size() > config_.frame_length) {
    throw InternalError("correction count exceeded the frame length");
  }
}

void ResponderSession::cascade_correct(const CorrectionEvent& event) {
  const auto current = static_cast<std::uint32_t>(rounds_.size() - 1);
  const Bit value = frame_.at(event.original_position);
  for (std::uint32_t r = 0; r < rounds_.size(); ++r) {
    Round& rd = rounds_[r];
    const std::size_t j = rd.layout.permutation[event.original_position];
    const std::size_t b = rd.layout.block_of(j);
    rd.index.flip(j);
    ColoredTree& tree = rd.trees[b];
    tree = set_syndrome(tree, Interval{j, j + 1}, value, current);
    tree = mark_compromised(tree, j);
    dirty_[{r, b}].positions.push_back(j);
  }
}

std::optional<Bit> ResponderSession::reuse_parity_lookup(const Interval& interval,
                                                         std::uint32_t round) const {
  if (!config_.parity_reuse || round >= rounds_.size() || interval.empty()) return std::nullopt;
  const Round& rd = rounds_[round];
  if (interval.hi > config_.frame_length) return std::nullopt;
  const ColoredTree& tree = rd.trees[rd.layout.block_of(interval.lo)];
  if (!tree.interval().contains(interval)) return std::nullopt;
  const ParityNode* n = tree.locate(interval);
  return n ? derive_from_below(*n) : std::nullopt;
}

std::set<std::size_t> ResponderSession::compromised_positions() const {
  std::set<std::size_t> out;
  for (const auto& ev : corrections_) out.insert(ev.original_position);
  return out;
}

}  // namespace cascade
