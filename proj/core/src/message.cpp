#include "cascade/message.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

enum Tag : std::uint8_t {
  kInit = 0,
  kBlockParities = 1,
  kParityQuery = 2,
  kParityAnswer = 3,
  kRoundDone = 4,
  kFinalize = 5,
  kResult = 6,
};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8(const std::string& field) {
    need(1, field);
    return in_[pos_++];
  }
  std::uint32_t u32(const std::string& field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  std::uint64_t u64(const std::string& field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64(const std::string& field) { return std::bit_cast<double>(u64(field)); }
  Bit bit(const std::string& field) {
    const std::uint8_t v = u8(field);
    if (v > 1) throw DecodeError(field, "bit value " + std::to_string(v) + " is not 0 or 1");
    return v;
  }
  bool flag(const std::string& field) { return bit(field) != 0; }

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t n, const std::string& field) const {
    if (in_.size() - pos_ < n) {
      throw DecodeError(field, "truncated buffer (need " + std::to_string(n) + " bytes, have " +
                                   std::to_string(in_.size() - pos_) + ")");
    }
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

Interval read_interval(Reader& r, const std::string& prefix) {
  Interval iv;
  iv.lo = r.u64(prefix + ".lo");
  iv.hi = r.u64(prefix + ".hi");
  if (iv.lo >= iv.hi) throw DecodeError(prefix, "empty or inverted interval");
  return iv;
}

void write_body(Writer& w, const InitMsg& m) {
  w.u64(m.frame_length);
  if (const auto* s = std::get_if<StaticSchedule>(&m.schedule)) {
    w.u8(0);
    w.u32(s->k);
    w.f64(s->qber_estimate);
  } else {
    w.u8(1);
    w.f64(std::get<DynamicSchedule>(m.schedule).initial_qber_estimate);
  }
  if (const auto* p = std::get_if<ProbabilisticBreak>(&m.break_condition)) {
    w.u8(0);
    w.u64(p->quiet_rounds);
  } else if (const auto* t = std::get_if<ThresholdBreak>(&m.break_condition)) {
    w.u8(1);
    w.u64(t->min_corrected);
  } else {
    w.u8(2);
    w.u64(std::get<StaticBreak>(m.break_condition).total_rounds);
  }
  w.u8(static_cast<std::uint8_t>(m.permutation_kind));
  w.u64(m.seed);
  w.u8(m.aggregation ? 1 : 0);
  w.u8(m.parity_reuse ? 1 : 0);
}

void write_body(Writer& w, const BlockParitiesMsg& m) {
  w.u32(m.round);
  w.u64(m.parities.size());
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < m.parities.size(); ++i) {
    byte |= static_cast<std::uint8_t>((m.parities[i] & 1U) << (i % 8));
    if (i % 8 == 7) {
      w.u8(byte);
      byte = 0;
    }
  }
  if (m.parities.size() % 8 != 0) w.u8(byte);
}

void write_body(Writer& w, const ParityQueryMsg& m) {
  w.u32(m.round);
  w.u32(static_cast<std::uint32_t>(m.intervals.size()));
  for (const auto& e : m.intervals) {
    w.u32(e.round);
    w.u64(e.interval.lo);
    w.u64(e.interval.hi);
  }
}

void write_body(Writer& w, const ParityAnswerMsg& m) {
  w.u32(m.round);
  w.u32(static_cast<std::uint32_t>(m.entries.size()));
  for (const auto& e : m.entries) {
    w.u32(e.round);
    w.u64(e.interval.lo);
    w.u64(e.interval.hi);
    w.u8(e.parity);
  }
}

void write_body(Writer& w, const RoundDoneMsg& m) {
  w.u32(m.round);
  w.u64(m.corrected);
}

void write_body(Writer& w, const FinalizeMsg& m) { w.u64(m.fingerprint); }

void write_body(Writer& w, const ResultMsg& m) {
  w.u8(static_cast<std::uint8_t>(m.status));
  w.u64(m.corrected);
  w.u64(m.disclosed);
}

InitMsg read_init(Reader& r) {
  InitMsg m;
  m.frame_length = r.u64("Init.frame_length");
  switch (r.u8("Init.schedule")) {
    case 0: {
      StaticSchedule s;
      s.k = r.u32("Init.schedule.k");
      s.qber_estimate = r.f64("Init.schedule.qber_estimate");
      m.schedule = s;
      break;
    }
    case 1:
      m.schedule = DynamicSchedule{r.f64("Init.schedule.initial_qber_estimate")};
      break;
    default:
      throw DecodeError("Init.schedule", "unknown schedule variant");
  }
  const std::uint8_t brk = r.u8("Init.break_condition");
  const std::uint64_t param = r.u64("Init.break_condition.param");
  switch (brk) {
    case 0:
      m.break_condition = ProbabilisticBreak{param};
      break;
    case 1:
      m.break_condition = ThresholdBreak{param};
      break;
    case 2:
      m.break_condition = StaticBreak{param};
      break;
    default:
      throw DecodeError("Init.break_condition", "unknown break variant");
  }
  const std::uint8_t kind = r.u8("Init.permutation_kind");
  if (kind > 1) throw DecodeError("Init.permutation_kind", "unknown permutation kind");
  m.permutation_kind = static_cast<PermutationKind>(kind);
  m.seed = r.u64("Init.seed");
  m.aggregation = r.flag("Init.aggregation");
  m.parity_reuse = r.flag("Init.parity_reuse");
  return m;
}

BlockParitiesMsg read_block_parities(Reader& r) {
  BlockParitiesMsg m;
  m.round = r.u32("BlockParities.round");
  const std::uint64_t count = r.u64("BlockParities.count");
  const std::uint64_t nbytes = (count + 7) / 8;
  if (nbytes > r.remaining()) {
    r.need(static_cast<std::size_t>(nbytes), "BlockParities.parities");
  }
  m.parities.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t b = 0; b < nbytes; ++b) {
    const std::uint8_t byte = r.u8("BlockParities.parities[" + std::to_string(b) + "]");
    for (std::uint64_t i = 0; i < 8; ++i) {
      const std::uint64_t idx = b * 8 + i;
      const Bit bit = static_cast<Bit>((byte >> i) & 1U);
      if (idx < count) {
        m.parities.push_back(bit);
      } else if (bit != 0) {
        throw DecodeError("BlockParities.parities", "nonzero padding bit");
      }
    }
  }
  return m;
}

ParityQueryMsg read_query(Reader& r) {
  ParityQueryMsg m;
  m.round = r.u32("ParityQuery.round");
  const std::uint32_t count = r.u32("ParityQuery.count");
  r.need(std::size_t{count} * 20, "ParityQuery.intervals");
  m.intervals.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string prefix = "ParityQuery.intervals[" + std::to_string(i) + "]";
    QueryEntry e;
    e.round = r.u32(prefix + ".round");
    e.interval = read_interval(r, prefix);
    m.intervals.push_back(e);
  }
  return m;
}

ParityAnswerMsg read_answer(Reader& r) {
  ParityAnswerMsg m;
  m.round = r.u32("ParityAnswer.round");
  const std::uint32_t count = r.u32("ParityAnswer.count");
  r.need(std::size_t{count} * 21, "ParityAnswer.entries");
  m.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string prefix = "ParityAnswer.entries[" + std::to_string(i) + "]";
    AnswerEntry e;
    e.round = r.u32(prefix + ".round");
    e.interval = read_interval(r, prefix);
    e.parity = r.bit(prefix + ".parity");
    m.entries.push_back(e);
  }
  return m;
}

ResultMsg read_result(Reader& r) {
  ResultMsg m;
  const std::uint8_t status = r.u8("Result.status");
  if (status > static_cast<std::uint8_t>(SessionStatus::Aborted)) {
    throw DecodeError("Result.status", "unknown status " + std::to_string(status));
  }
  m.status = static_cast<SessionStatus>(status);
  m.corrected = r.u64("Result.corrected");
  m.disclosed = r.u64("Result.disclosed");
  return m;
}

std::string describe_schedule(const BlockScheduleConfig& s) {
  std::ostringstream out;
  if (const auto* st = std::get_if<StaticSchedule>(&s)) {
    out << "static(k=" << st->k << ",q=" << st->qber_estimate << ')';
  } else {
    out << "dynamic(q=" << std::get<DynamicSchedule>(s).initial_qber_estimate << ')';
  }
  return out.str();
}

std::string describe_break(const BreakCondition& b) {
  if (const auto* p = std::get_if<ProbabilisticBreak>(&b)) {
    return "probabilistic:" + std::to_string(p->quiet_rounds);
  }
  if (const auto* t = std::get_if<ThresholdBreak>(&b)) {
    return "threshold:" + std::to_string(t->min_corrected);
  }
  return "static:" + std::to_string(std::get<StaticBreak>(b).total_rounds);
}

}  // namespace

const char* to_string(SessionStatus s) noexcept {
  switch (s) {
    case SessionStatus::Ready:
      return "ready";
    case SessionStatus::Success:
      return "success";
    case SessionStatus::Failure:
      return "failure";
    case SessionStatus::ConfigMismatch:
      return "config-mismatch";
    case SessionStatus::Aborted:
      return "aborted";
  }
  return "?";
}

const char* to_string(Direction d) noexcept {
  return d == Direction::InitiatorToResponder ? "A->B" : "B->A";
}

const char* message_name(const Payload& payload) noexcept {
  static constexpr const char* kNames[] = {"Init",     "BlockParities", "ParityQuery", "ParityAnswer",
                                           "RoundDone", "Finalize",     "Result"};
  return kNames[payload.index()];
}

std::size_t parity_bit_count(const Payload& payload) noexcept {
  if (const auto* b = std::get_if<BlockParitiesMsg>(&payload)) return b->parities.size();
  if (const auto* a = std::get_if<ParityAnswerMsg>(&payload)) return a->entries.size();
  return 0;
}

std::vector<std::uint8_t> encode(const Message& message) {
  Writer w;
  w.u8(kSchemaVersion);
  w.u8(static_cast<std::uint8_t>(message.payload.index()));
  w.u64(message.seq);
  std::visit([&](const auto& body) { write_body(w, body); }, message.payload);
  return w.take();
}

Message decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint8_t version = r.u8("version");
  if (version != kSchemaVersion) {
    throw DecodeError("version", "unsupported schema version " + std::to_string(version));
  }
  const std::uint8_t tag = r.u8("tag");
  Message m;
  m.seq = r.u64("seq");
  switch (tag) {
    case kInit:
      m.payload = read_init(r);
      break;
    case kBlockParities:
      m.payload = read_block_parities(r);
      break;
    case kParityQuery:
      m.payload = read_query(r);
      break;
    case kParityAnswer:
      m.payload = read_answer(r);
      break;
    case kRoundDone: {
      RoundDoneMsg d;
      d.round = r.u32("RoundDone.round");
      d.corrected = r.u64("RoundDone.corrected");
      m.payload = d;
      break;
    }
    case kFinalize:
      m.payload = FinalizeMsg{r.u64("Finalize.fingerprint")};
      break;
    case kResult:
      m.payload = read_result(r);
      break;
    default:
      throw DecodeError("tag", "unknown message tag " + std::to_string(tag));
  }
  if (r.remaining() != 0) {
    throw DecodeError(message_name(m.payload), std::to_string(r.remaining()) + " trailing bytes");
  }
  return m;
}

std::string to_text(const Message& message) {
  std::ostringstream out;
  out << '#' << message.seq << ' ' << message_name(message.payload);
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, InitMsg>) {
          out << " n=" << body.frame_length << " schedule=" << describe_schedule(body.schedule)
              << " break=" << describe_break(body.break_condition)
              << " perm=" << (body.permutation_kind == PermutationKind::Shuffle ? "shuffle" : "lcg")
              << " seed=" << body.seed << " aggregation=" << body.aggregation
              << " reuse=" << body.parity_reuse;
        } else if constexpr (std::is_same_v<T, BlockParitiesMsg>) {
          out << " round=" << body.round << " bits=";
          for (Bit b : body.parities) out << int(b);
        } else if constexpr (std::is_same_v<T, ParityQueryMsg>) {
          out << " round=" << body.round;
          for (const auto& e : body.intervals) out << ' ' << e.round << ':' << e.interval;
        } else if constexpr (std::is_same_v<T, ParityAnswerMsg>) {
          out << " round=" << body.round;
          for (const auto& e : body.entries) {
            out << ' ' << e.round << ':' << e.interval << '=' << int(e.parity);
          }
        } else if constexpr (std::is_same_v<T, RoundDoneMsg>) {
          out << " round=" << body.round << " corrected=" << body.corrected;
        } else if constexpr (std::is_same_v<T, FinalizeMsg>) {
          out << " fingerprint=0x" << std::hex << body.fingerprint << std::dec;
        } else {
          out << " status=" << to_string(body.status) << " corrected=" << body.corrected
              << " disclosed=" << body.disclosed;
        }
      },
      message.payload);
  return out.str();
}

}  // namespace cascade
