#include "sim_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cascade/errors.hpp"
#include "json.hpp"

namespace cascade::sim {

namespace {

using json = nlohmann::json;

template <typename T>
void take(std::optional<T>& dst, const std::optional<T>& src) {
  if (src) dst = src;
}

template <typename T>
T as_unsigned(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError("config key '" + key + "' must be a non-negative integer");
  return v.get<T>();
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

bool as_toggle(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) return parse_toggle(v.get<std::string>());
  throw ConfigError("config key '" + key + "' must be a boolean or on/off");
}

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  if (!out.emplace(prefix, node).second) throw ConfigError("config key '" + prefix + "' given twice");
}

using Setter = std::function<void(Settings&, const json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"length", [](Settings& s, const json& v, const std::string& k) { s.length = as_unsigned<std::size_t>(v, k); }},
      {"qber", [](Settings& s, const json& v, const std::string& k) { s.qber = as_number(v, k); }},
      {"errors", [](Settings& s, const json& v, const std::string& k) { s.errors = as_unsigned<std::size_t>(v, k); }},
      {"seed", [](Settings& s, const json& v, const std::string& k) { s.seed = as_unsigned<std::uint64_t>(v, k); }},
      {"schedule.variant", [](Settings& s, const json& v, const std::string& k) { s.schedule_variant = as_string(v, k); }},
      {"schedule.k", [](Settings& s, const json& v, const std::string& k) { s.schedule_k = as_unsigned<std::uint32_t>(v, k); }},
      {"schedule.qber_estimate", [](Settings& s, const json& v, const std::string& k) { s.qber_estimate = as_number(v, k); }},
      {"break.variant", [](Settings& s, const json& v, const std::string& k) { s.break_variant = as_string(v, k); }},
      {"break.param", [](Settings& s, const json& v, const std::string& k) { s.break_param = as_unsigned<std::size_t>(v, k); }},
      {"permutation", [](Settings& s, const json& v, const std::string& k) { s.permutation = as_string(v, k); }},
      {"aggregation", [](Settings& s, const json& v, const std::string& k) { s.aggregation = as_toggle(v, k); }},
      {"parity_reuse", [](Settings& s, const json& v, const std::string& k) { s.parity_reuse = as_toggle(v, k); }},
      {"scheduling", [](Settings& s, const json& v, const std::string& k) { s.scheduling = as_string(v, k); }},
      {"transcript", [](Settings& s, const json& v, const std::string& k) { s.transcript = as_string(v, k); }},
      {"out", [](Settings& s, const json& v, const std::string& k) { s.out = as_string(v, k); }},
      {"format", [](Settings& s, const json& v, const std::string& k) { s.format = as_string(v, k); }},
      {"repeats", [](Settings& s, const json& v, const std::string& k) { s.repeats = as_unsigned<std::size_t>(v, k); }},
      {"base_seed", [](Settings& s, const json& v, const std::string& k) { s.base_seed = as_unsigned<std::uint64_t>(v, k); }},
      {"threads", [](Settings& s, const json& v, const std::string& k) { s.threads = as_unsigned<std::size_t>(v, k); }},
      {"estimate_factor", [](Settings& s, const json& v, const std::string& k) { s.estimate_factor = as_number(v, k); }},
      {"qber_start", [](Settings& s, const json& v, const std::string& k) { s.qber_start = as_number(v, k); }},
      {"qber_step", [](Settings& s, const json& v, const std::string& k) { s.qber_step = as_number(v, k); }},
      {"steps", [](Settings& s, const json& v, const std::string& k) { s.steps = as_unsigned<std::size_t>(v, k); }},
      {"length_start", [](Settings& s, const json& v, const std::string& k) { s.length_start = as_unsigned<std::size_t>(v, k); }},
      {"length_step", [](Settings& s, const json& v, const std::string& k) { s.length_step = as_unsigned<std::size_t>(v, k); }},
      {"length_stop", [](Settings& s, const json& v, const std::string& k) { s.length_stop = as_unsigned<std::size_t>(v, k); }},
  };
  return table;
}

std::pair<std::string_view, std::string_view> split_colon(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return {text, {}};
  return {text.substr(0, colon), text.substr(colon + 1)};
}

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t used = 0;
  std::size_t v = 0;
  const std::string s(text);
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || s[0] == '-') {
    throw ConfigError(std::string(what) + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

}  // namespace

Settings merge(Settings b, const Settings& o) {
  take(b.length, o.length);
  take(b.qber, o.qber);
  take(b.errors, o.errors);
  take(b.seed, o.seed);
  take(b.schedule_variant, o.schedule_variant);
  take(b.schedule_k, o.schedule_k);
  take(b.qber_estimate, o.qber_estimate);
  take(b.break_variant, o.break_variant);
  take(b.break_param, o.break_param);
  take(b.permutation, o.permutation);
  take(b.aggregation, o.aggregation);
  take(b.parity_reuse, o.parity_reuse);
  take(b.scheduling, o.scheduling);
  take(b.transcript, o.transcript);
  take(b.out, o.out);
  take(b.format, o.format);
  take(b.repeats, o.repeats);
  take(b.base_seed, o.base_seed);
  take(b.threads, o.threads);
  take(b.estimate_factor, o.estimate_factor);
  take(b.qber_start, o.qber_start);
  take(b.qber_step, o.qber_step);
  take(b.steps, o.steps);
  take(b.length_start, o.length_start);
  take(b.length_step, o.length_step);
  take(b.length_stop, o.length_stop);
  return b;
}

Settings parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  std::map<std::string, json> flat;
  flatten(doc, "", flat);
  Settings s;
  for (const auto& [key, value] : flat) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(s, value, key);
  }
  return s;
}

Settings load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

bool parse_toggle(std::string_view t) {
  if (t == "on" || t == "true" || t == "1") return true;
  if (t == "off" || t == "false" || t == "0") return false;
  throw ConfigError("expected on or off, got '" + std::string(t) + "'");
}

void apply_schedule_flag(Settings& s, std::string_view text) {
  const auto [name, arg] = split_colon(text);
  if (name != "static" && name != "dynamic") {
    throw ConfigError("unknown schedule '" + std::string(name) + "' (expected static or dynamic)");
  }
  s.schedule_variant = std::string(name);
  if (arg.empty()) return;
  if (name != "static" || arg.substr(0, 2) != "k=") {
    throw ConfigError("schedule argument must be k=<factor> on the static schedule");
  }
  s.schedule_k = static_cast<std::uint32_t>(parse_count(arg.substr(2), "schedule k"));
}

void apply_break_flag(Settings& s, std::string_view text) {
  const auto [name, arg] = split_colon(text);
  s.break_variant = std::string(name);
  if (!arg.empty()) s.break_param = parse_count(arg, "break parameter");
}

SessionConfig session_config(const Settings& s) {
  SessionConfig c = default_session_template();
  c.frame_length = s.length.value_or(4096);
  c.seed = s.seed.value_or(1);

  const std::string schedule = s.schedule_variant.value_or("static");
  const double estimate = s.qber_estimate.value_or(s.qber.value_or(0.02));
  if (schedule == "static") {
    c.schedule = StaticSchedule{s.schedule_k.value_or(2), estimate};
  } else if (schedule == "dynamic") {
    if (s.schedule_k) throw ConfigError("schedule.k only applies to the static schedule");
    c.schedule = DynamicSchedule{estimate};
  } else {
    throw ConfigError("unknown schedule variant '" + schedule + "'");
  }

  const std::string brk = s.break_variant.value_or("static");
  if (brk == "static") {
    c.break_condition = StaticBreak{s.break_param.value_or(4)};
  } else if (brk == "probabilistic") {
    c.break_condition = ProbabilisticBreak{s.break_param.value_or(2)};
  } else if (brk == "threshold") {
    c.break_condition = ThresholdBreak{s.break_param.value_or(1)};
  } else {
    throw ConfigError("unknown break variant '" + brk + "' (expected static, probabilistic or threshold)");
  }

  const std::string perm = s.permutation.value_or("lcg");
  if (perm == "lcg") {
    c.permutation_kind = PermutationKind::Lcg;
  } else if (perm == "shuffle") {
    c.permutation_kind = PermutationKind::Shuffle;
  } else {
    throw ConfigError("unknown permutation '" + perm + "' (expected shuffle or lcg)");
  }
  c.aggregation = s.aggregation.value_or(false);
  c.parity_reuse = s.parity_reuse.value_or(true);
  return c;
}

TrialOptions trial_options(const Settings& s) {
  TrialOptions o;
  o.auto_estimate = !s.qber_estimate.has_value();
  o.estimate_factor = s.estimate_factor.value_or(1.0);
  if (!(o.estimate_factor > 0.0)) throw ConfigError("estimate_factor must be positive");
  const std::string sched = s.scheduling.value_or("lockstep");
  if (sched == "lockstep") {
    o.scheduling = Scheduling::Lockstep;
  } else if (sched == "concurrent") {
    o.scheduling = Scheduling::Concurrent;
  } else {
    throw ConfigError("unknown scheduling '" + sched + "' (expected lockstep or concurrent)");
  }
  return o;
}

NoiseSpec noise_spec(const Settings& s) {
  if (s.qber && s.errors) throw ConfigError("qber and errors are mutually exclusive");
  if (s.qber) return BscNoise{*s.qber};
  if (s.errors) return FixedErrors{*s.errors};
  throw ConfigError("one of qber or errors is required");
}

ExperimentSpec experiment_spec(const Settings& s, SweepKind kind) {
  ExperimentSpec spec;
  spec.session = session_config(s);
  spec.options = trial_options(s);
  spec.repeats = s.repeats.value_or(3);
  spec.base_seed = s.base_seed.value_or(1);
  spec.threads = s.threads.value_or(0);
  if (kind == SweepKind::Qber) {
    QberSweep q;
    q.length = s.length.value_or(q.length);
    q.qber_start = s.qber_start.value_or(q.qber_start);
    q.qber_step = s.qber_step.value_or(q.qber_step);
    q.steps = s.steps.value_or(q.steps);
    spec.scenario = q;
  } else {
    LengthSweep l;
    l.start = s.length_start.value_or(l.start);
    l.step = s.length_step.value_or(l.step);
    l.stop = s.length_stop.value_or(l.stop);
    l.fixed_errors = s.errors.value_or(l.fixed_errors);
    spec.scenario = l;
  }
  validate(spec);
  return spec;
}

}  // namespace cascade::sim
