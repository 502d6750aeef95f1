#include "cascade/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "cascade/errors.hpp"
#include "cascade/rng.hpp"

namespace cascade {

namespace {

using ordered_json = nlohmann::ordered_json;

double noise_qber(const NoiseSpec& noise, std::size_t length) {
  if (const auto* bsc = std::get_if<BscNoise>(&noise)) return bsc->qber;
  return static_cast<double>(std::get<FixedErrors>(noise).count) / static_cast<double>(length);
}

// Keeps a scaled estimate inside the schedule's open interval (0, 0.5).
double clamp_estimate(double e) { return std::clamp(e, 1e-9, 0.5 - 1e-9); }

double schedule_estimate(const BlockScheduleConfig& s) {
  if (const auto* st = std::get_if<StaticSchedule>(&s)) return st->qber_estimate;
  return std::get<DynamicSchedule>(s).initial_qber_estimate;
}

void set_schedule_estimate(BlockScheduleConfig& s, double e) {
  if (auto* st = std::get_if<StaticSchedule>(&s)) {
    st->qber_estimate = e;
  } else {
    std::get<DynamicSchedule>(s).initial_qber_estimate = e;
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t scenario_label(std::string_view scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const char c : scenario) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SessionConfig default_session_template() {
  SessionConfig c;
  c.permutation_kind = PermutationKind::Lcg;
  c.schedule = StaticSchedule{2, 0.02};
  c.break_condition = StaticBreak{4};
  c.aggregation = false;
  c.parity_reuse = true;
  return c;
}

void validate(const ExperimentSpec& spec) {
  if (spec.repeats == 0) throw ConfigError("repeats must be positive");
  if (!(spec.options.estimate_factor > 0.0)) throw ConfigError("estimate_factor must be positive");
  validate_break(spec.session.break_condition);
  if (!spec.options.auto_estimate) validate_schedule(spec.session.schedule);
  if (const auto* q = std::get_if<QberSweep>(&spec.scenario)) {
    if (q->length == 0) throw ConfigError("qber sweep length must be positive");
    if (q->steps == 0) throw ConfigError("qber sweep needs at least one step");
    if (!(q->qber_step >= 0.0)) throw ConfigError("qber_step must be non-negative");
    const double last = q->qber_start + static_cast<double>(q->steps - 1) * q->qber_step;
    validate_noise(BscNoise{q->qber_start}, q->length);
    validate_noise(BscNoise{last}, q->length);
  } else {
    const auto& l = std::get<LengthSweep>(spec.scenario);
    if (l.start == 0 || l.step == 0) throw ConfigError("length sweep start and step must be positive");
    if (l.stop < l.start) throw ConfigError("length sweep stop must not be below start");
    validate_noise(FixedErrors{l.fixed_errors}, l.start);
  }
}

TrialOutcome run_trial_detailed(const SessionConfig& session, const NoiseSpec& noise,
                                std::uint64_t seed, const TrialOptions& options) {
  SessionConfig cfg = session;
  const std::size_t n = cfg.frame_length;
  if (n == 0) throw ConfigError("frame_length must be positive");
  validate_noise(noise, n);

  TrialOutcome out;
  SeededRng frame_rng(derive_seed(seed, 1));
  SeededRng noise_rng(derive_seed(seed, 2));
  out.alice = BitFrame::random(n, frame_rng);
  NoiseResult noisy = apply_noise(out.alice, noise, noise_rng);
  out.bob_initial = noisy.frame;
  cfg.seed = derive_seed(seed, 3);

  const double qber_true = noise_qber(noise, n);
  if (options.auto_estimate) {
    if (!(options.estimate_factor > 0.0)) throw ConfigError("estimate_factor must be positive");
    // Zero injected errors has no rate to estimate; assume one error per frame.
    const double base = qber_true > 0.0 ? qber_true : 1.0 / static_cast<double>(n);
    set_schedule_estimate(cfg.schedule, clamp_estimate(base * options.estimate_factor));
  }
  validate(cfg);

  SessionConfig alice_cfg = cfg;
  alice_cfg.role = Role::Initiator;
  SessionConfig bob_cfg = cfg;
  bob_cfg.role = Role::Responder;

  Channel channel;
  auto eve = std::make_shared<Eve>();
  channel.add_tap(eve);
  InitiatorSession alice(alice_cfg, out.alice);
  ResponderSession bob(bob_cfg, noisy.frame);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    run_parties(alice, bob, channel, options.scheduling);
  } catch (const std::exception& e) {
    out.error = e.what();
    if (out.error.empty()) out.error = "unknown failure";
  }
  const auto t1 = std::chrono::steady_clock::now();

  out.transcript = channel.transcript();
  out.bob_final = bob.frame();
  out.initiator_status = alice.final_status();
  out.responder_status = bob.final_status();
  out.initiator_disclosed = alice.disclosed_bits();
  out.responder_disclosed = bob.disclosed_bits();
  out.transcript_disclosed = leakage(out.transcript).parity_bits_disclosed;
  out.eve_disclosed = eve->parity_bits();
  out.corrections = bob.corrections();

  TrialRecord& r = out.record;
  r.scenario = "single";
  r.seed = seed;
  r.length = n;
  r.qber_true = qber_true;
  r.qber_estimate = schedule_estimate(cfg.schedule);
  r.injected_errors = noisy.flipped;
  r.rounds_executed = bob.history().size();
  r.corrected_errors = bob.corrections().size();
  r.residual_errors = hamming_distance(out.alice, out.bob_final);
  r.parity_bits_disclosed = bob.disclosed_bits();
  r.parity_fraction = static_cast<double>(r.parity_bits_disclosed) / static_cast<double>(n);
  r.messages_sent = out.transcript.size();
  r.aborted = !out.error.empty();
  r.success = !r.aborted && alice.finished() && bob.finished() &&
              out.initiator_status.status == SessionStatus::Success &&
              out.responder_status.status == SessionStatus::Success;
  r.wall_time = std::chrono::duration<double>(t1 - t0).count();
  return out;
}

TrialRecord run_trial(const SessionConfig& session, const NoiseSpec& noise, std::uint64_t seed,
                      const TrialOptions& options) {
  return run_trial_detailed(session, noise, seed, options).record;
}

std::uint64_t trial_seed(std::uint64_t base_seed, std::string_view scenario, std::size_t point,
                         std::size_t repeat) {
  const std::uint64_t per_scenario = derive_seed(base_seed, scenario_label(scenario));
  return derive_seed(per_scenario, (static_cast<std::uint64_t>(point) << 32) | (repeat & 0xFFFFFFFFULL));
}

std::vector<TrialPlan> plan_trials(const ExperimentSpec& spec) {
  validate(spec);
  std::vector<TrialPlan> plans;
  if (const auto* q = std::get_if<QberSweep>(&spec.scenario)) {
    for (std::size_t p = 0; p < q->steps; ++p) {
      const double qber = q->qber_start + static_cast<double>(p) * q->qber_step;
      for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
        plans.push_back(TrialPlan{"qber", plans.size(), q->length, BscNoise{qber},
                                  trial_seed(spec.base_seed, "qber", p, rep)});
      }
    }
  } else {
    const auto& l = std::get<LengthSweep>(spec.scenario);
    std::size_t p = 0;
    for (std::size_t len = l.start; len <= l.stop; len += l.step, ++p) {
      for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
        plans.push_back(TrialPlan{"length", plans.size(), len, FixedErrors{l.fixed_errors},
                                  trial_seed(spec.base_seed, "length", p, rep)});
      }
    }
  }
  return plans;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i; !stop && (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

SessionConfig session_for(const ExperimentSpec& spec, const TrialPlan& plan) {
  SessionConfig s = spec.session;
  s.frame_length = plan.length;
  return s;
}

TrialRecord run_plan(const ExperimentSpec& spec, const TrialPlan& plan, const SessionConfig& session) {
  TrialRecord r = run_trial(session, plan.noise, plan.seed, spec.options);
  r.scenario = plan.scenario;
  r.trial_index = plan.trial_index;
  return r;
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec) {
  const auto plans = plan_trials(spec);
  std::vector<TrialRecord> records(plans.size());
  parallel_for(plans.size(), spec.threads, [&](std::size_t i) {
    records[i] = run_plan(spec, plans[i], session_for(spec, plans[i]));
  });
  return records;
}

std::vector<TrialRecord> sweep_qber(const ExperimentSpec& spec) {
  if (!std::holds_alternative<QberSweep>(spec.scenario)) throw ConfigError("sweep_qber needs a QberSweep scenario");
  return run_experiment(spec);
}

std::vector<TrialRecord> sweep_length(const ExperimentSpec& spec) {
  if (!std::holds_alternative<LengthSweep>(spec.scenario)) {
    throw ConfigError("sweep_length needs a LengthSweep scenario");
  }
  return run_experiment(spec);
}

std::vector<AggregationPair> compare_aggregation(const ExperimentSpec& spec) {
  const auto plans = plan_trials(spec);
  std::vector<AggregationPair> pairs(plans.size());
  parallel_for(plans.size(), spec.threads, [&](std::size_t i) {
    const TrialPlan& plan = plans[i];
    SessionConfig off = session_for(spec, plan);
    off.aggregation = false;
    SessionConfig on = off;
    on.aggregation = true;
    TrialOutcome a = run_trial_detailed(off, plan.noise, plan.seed, spec.options);
    TrialOutcome b = run_trial_detailed(on, plan.noise, plan.seed, spec.options);
    for (TrialRecord* r : {&a.record, &b.record}) {
      r->scenario = plan.scenario;
      r->trial_index = plan.trial_index;
    }
    b.record.messages_baseline = a.record.messages_sent;
    pairs[i] = AggregationPair{std::move(a.record), std::move(b.record), a.bob_final == b.bob_final};
  });
  return pairs;
}

// ---------------------------------------------------------------------------
// Export

ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "jsonl") return ExportFormat::Jsonl;
  throw ConfigError("unknown export format '" + std::string(name) + "' (expected csv or jsonl)");
}

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> columns = {
      "scenario",        "trial_index",      "seed",
      "length",          "qber_true",        "qber_estimate",
      "injected_errors", "rounds_executed",  "corrected_errors",
      "residual_errors", "parity_bits_disclosed", "parity_fraction",
      "messages_sent",   "messages_baseline", "success",
      "aborted",         "wall_time"};
  return columns;
}

namespace {

ordered_json to_json(const TrialRecord& r) {
  ordered_json j;
  j["scenario"] = r.scenario;
  j["trial_index"] = r.trial_index;
  j["seed"] = r.seed;
  j["length"] = r.length;
  j["qber_true"] = r.qber_true;
  j["qber_estimate"] = r.qber_estimate;
  j["injected_errors"] = r.injected_errors;
  j["rounds_executed"] = r.rounds_executed;
  j["corrected_errors"] = r.corrected_errors;
  j["residual_errors"] = r.residual_errors;
  j["parity_bits_disclosed"] = r.parity_bits_disclosed;
  j["parity_fraction"] = r.parity_fraction;
  j["messages_sent"] = r.messages_sent;
  j["messages_baseline"] = r.messages_baseline ? ordered_json(*r.messages_baseline) : ordered_json(nullptr);
  j["success"] = r.success;
  j["aborted"] = r.aborted;
  j["wall_time"] = r.wall_time;
  return j;
}

TrialRecord from_json(const ordered_json& j) {
  TrialRecord r;
  r.scenario = j.at("scenario").get<std::string>();
  r.trial_index = j.at("trial_index").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.length = j.at("length").get<std::size_t>();
  r.qber_true = j.at("qber_true").get<double>();
  r.qber_estimate = j.at("qber_estimate").get<double>();
  r.injected_errors = j.at("injected_errors").get<std::size_t>();
  r.rounds_executed = j.at("rounds_executed").get<std::size_t>();
  r.corrected_errors = j.at("corrected_errors").get<std::size_t>();
  r.residual_errors = j.at("residual_errors").get<std::size_t>();
  r.parity_bits_disclosed = j.at("parity_bits_disclosed").get<std::size_t>();
  r.parity_fraction = j.at("parity_fraction").get<double>();
  r.messages_sent = j.at("messages_sent").get<std::size_t>();
  if (const auto& b = j.at("messages_baseline"); !b.is_null()) r.messages_baseline = b.get<std::size_t>();
  r.success = j.at("success").get<bool>();
  r.aborted = j.at("aborted").get<bool>();
  r.wall_time = j.at("wall_time").get<double>();
  return r;
}

std::vector<std::string> csv_row(const TrialRecord& r) {
  if (r.scenario.find_first_of(",\"\r\n") != std::string::npos) {
    throw ConfigError("scenario id must not contain commas, quotes or newlines");
  }
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {r.scenario,
          std::to_string(r.trial_index),
          std::to_string(r.seed),
          std::to_string(r.length),
          format_double(r.qber_true),
          format_double(r.qber_estimate),
          std::to_string(r.injected_errors),
          std::to_string(r.rounds_executed),
          std::to_string(r.corrected_errors),
          std::to_string(r.residual_errors),
          std::to_string(r.parity_bits_disclosed),
          format_double(r.parity_fraction),
          std::to_string(r.messages_sent),
          r.messages_baseline ? std::to_string(*r.messages_baseline) : std::string(),
          b(r.success),
          b(r.aborted),
          format_double(r.wall_time)};
}

std::uint64_t parse_uint(const std::string& s, const std::string& column) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') throw ConfigError("CSV column " + column + ": bad integer '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& column) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError("CSV column " + column + ": bad number '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& column) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("CSV column " + column + ": bad boolean '" + s + "'");
}

TrialRecord from_csv_row(const std::vector<std::string>& f) {
  const auto& c = record_columns();
  TrialRecord r;
  r.scenario = f[0];
  r.trial_index = parse_uint(f[1], c[1]);
  r.seed = parse_uint(f[2], c[2]);
  r.length = parse_uint(f[3], c[3]);
  r.qber_true = parse_double(f[4], c[4]);
  r.qber_estimate = parse_double(f[5], c[5]);
  r.injected_errors = parse_uint(f[6], c[6]);
  r.rounds_executed = parse_uint(f[7], c[7]);
  r.corrected_errors = parse_uint(f[8], c[8]);
  r.residual_errors = parse_uint(f[9], c[9]);
  r.parity_bits_disclosed = parse_uint(f[10], c[10]);
  r.parity_fraction = parse_double(f[11], c[11]);
  r.messages_sent = parse_uint(f[12], c[12]);
  if (!f[13].empty()) r.messages_baseline = parse_uint(f[13], c[13]);
  r.success = parse_bool(f[14], c[14]);
  r.aborted = parse_bool(f[15], c[15]);
  r.wall_time = parse_double(f[16], c[16]);
  return r;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void write_records(std::ostream& out, const std::vector<TrialRecord>& records, ExportFormat format) {
  if (format == ExportFormat::Jsonl) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    return;
  }
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : records) {
    const auto row = csv_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

std::vector<TrialRecord> read_records(std::istream& in, ExportFormat format) {
  std::vector<TrialRecord> records;
  std::string line;
  if (format == ExportFormat::Jsonl) {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        records.push_back(from_json(ordered_json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed JSON-lines record: ") + e.what());
      }
    }
    return records;
  }
  if (!std::getline(in, line) || split_csv(line) != record_columns()) {
    throw ConfigError("CSV header does not match the record columns");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != record_columns().size()) throw ConfigError("CSV row has the wrong number of fields");
    records.push_back(from_csv_row(fields));
  }
  return records;
}

void export_records(const std::vector<TrialRecord>& records, ExportFormat format,
                    const std::filesystem::path& path) {
  if (records.empty()) throw ConfigError("refusing to export an empty record set");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_records(out, records, format);
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace cascade
