#include "cascade/channel.hpp"

#include <fstream>
#include <iterator>

#include "cascade/errors.hpp"

namespace cascade {

namespace {

constexpr std::uint8_t kMagic[4] = {'C', 'S', 'C', 'T'};
constexpr std::uint8_t kTranscriptVersion = 1;

std::size_t index_of(Direction d) { return static_cast<std::size_t>(d); }

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t& pos, int bytes,
                     const std::string& field) {
  if (in.size() - pos < static_cast<std::size_t>(bytes)) throw DecodeError(field, "truncated transcript");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in[pos++]} << (8 * i);
  return v;
}

}  // namespace

std::vector<Message> Transcript::messages(Direction direction) const {
  std::vector<Message> out;
  for (const auto& r : records_) {
    if (r.direction == direction) out.push_back(r.message());
  }
  return out;
}

void Transcript::check_sequence() const {
  std::uint64_t expected[2] = {0, 0};
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const std::size_t d = index_of(r.direction);
    if (r.seq != expected[d] || r.message().seq != r.seq) {
      throw DecodeError("records[" + std::to_string(i) + "].seq",
                        "expected " + std::to_string(expected[d]) + ", found " + std::to_string(r.seq));
    }
    ++expected[d];
  }
}

std::vector<std::uint8_t> Transcript::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kTranscriptVersion);
  for (const auto& r : records_) {
    out.push_back(static_cast<std::uint8_t>(r.direction));
    put_le(out, r.seq, 8);
    put_le(out, r.bytes.size(), 4);
    out.insert(out.end(), r.bytes.begin(), r.bytes.end());
  }
  return out;
}

Transcript Transcript::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw DecodeError("transcript.magic", "not a transcript file");
  }
  if (bytes[4] != kTranscriptVersion) {
    throw DecodeError("transcript.version", "unsupported version " + std::to_string(bytes[4]));
  }
  Transcript t;
  std::size_t pos = 5;
  while (pos < bytes.size()) {
    const std::string prefix = "transcript.records[" + std::to_string(t.size()) + "]";
    TranscriptRecord r;
    const auto dir = get_le(bytes, pos, 1, prefix + ".direction");
    if (dir > 1) throw DecodeError(prefix + ".direction", "unknown direction");
    r.direction = static_cast<Direction>(dir);
    r.seq = get_le(bytes, pos, 8, prefix + ".seq");
    const auto len = static_cast<std::size_t>(get_le(bytes, pos, 4, prefix + ".length"));
    if (bytes.size() - pos < len) throw DecodeError(prefix + ".bytes", "truncated transcript");
    r.bytes.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    (void)decode(r.bytes);
    t.append(std::move(r));
  }
  return t;
}

void Transcript::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open transcript file for writing: " + path.string());
  const auto bytes = serialize();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("failed writing transcript file: " + path.string());
}

Transcript Transcript::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open transcript file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

LeakageReport leakage(const Transcript& transcript) {
  LeakageReport report;
  for (const auto& r : transcript.records()) {
    const Message m = r.message();
    if (r.direction == Direction::InitiatorToResponder) {
      ++report.messages_initiator;
    } else {
      ++report.messages_responder;
    }
    const std::size_t bits = parity_bit_count(m.payload);
    if (bits == 0) continue;
    report.parity_bits_disclosed += bits;
    const std::uint32_t round = std::holds_alternative<BlockParitiesMsg>(m.payload)
                                    ? std::get<BlockParitiesMsg>(m.payload).round
                                    : std::get<ParityAnswerMsg>(m.payload).round;
    report.parity_bits_per_round[round] += bits;
  }
  return report;
}

void Eve::observe(Direction, std::span<const std::uint8_t> bytes) {
  Message m = decode(bytes);
  std::lock_guard lock(mutex_);
  parity_bits_ += parity_bit_count(m.payload);
  seen_.push_back(std::move(m));
}

std::size_t Eve::parity_bits() const {
  std::lock_guard lock(mutex_);
  return parity_bits_;
}

std::size_t Eve::messages() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

std::vector<Message> Eve::observed() const {
  std::lock_guard lock(mutex_);
  return seen_;
}

void Channel::add_tap(std::shared_ptr<ChannelTap> tap) {
  std::lock_guard lock(mutex_);
  taps_.push_back(std::move(tap));
}

void Channel::send(Direction direction, Message message) {
  std::lock_guard lock(mutex_);
  if (closed_) throw TransportError("send on a closed channel");
  const std::size_t d = index_of(direction);
  message.seq = next_seq_[d]++;
  auto bytes = encode(message);
  for (const auto& tap : taps_) tap->observe(direction, bytes);
  transcript_.append({direction, message.seq, bytes});
  queues_[d].push_back(std::move(bytes));
  ready_.notify_all();
}

std::optional<Message> Channel::try_recv(Direction direction) {
  std::lock_guard lock(mutex_);
  auto& q = queues_[index_of(direction)];
  if (q.empty()) return std::nullopt;
  auto bytes = std::move(q.front());
  q.pop_front();
  return decode(bytes);
}

std::optional<Message> Channel::recv(Direction direction) {
  std::unique_lock lock(mutex_);
  auto& q = queues_[index_of(direction)];
  ready_.wait(lock, [&] { return !q.empty() || closed_; });
  if (q.empty()) return std::nullopt;
  auto bytes = std::move(q.front());
  q.pop_front();
  return decode(bytes);
}

void Channel::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  ready_.notify_all();
}

bool Channel::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

Transcript Channel::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

}  // namespace cascade
