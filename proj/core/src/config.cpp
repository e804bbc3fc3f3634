#include "rydchain/config.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "rydchain/error.hpp"
#include "rydchain/statevec.hpp"

namespace rydchain {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::kValidation, key + ": " + what);
}

int as_int(const std::string& key, const json& v) {
  if (v.is_number_integer()) {
    const auto x = v.get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) invalid(key, "integer out of range");
    return static_cast<int>(x);
  }
  invalid(key, "expected an integer");
}

std::uint64_t as_uint(const std::string& key, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  invalid(key, "expected a non-negative integer");
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) invalid(key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) invalid(key, "expected a finite number");
  return x;
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) invalid(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) invalid(key, "expected a string");
  return v.get<std::string>();
}

std::optional<double> as_optional_real(const std::string& key, const json& v) {
  if (v.is_null()) return std::nullopt;
  return as_real(key, v);
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

#define RYD_KEY(NAME, FIELD, CONV) \
  KeyDef { NAME, [](RunConfig& c, const json& v) { c.FIELD = CONV(NAME, v); }, [](const RunConfig& c) { return json(c.FIELD); } }
#define RYD_OPT_KEY(NAME, FIELD)                                                               \
  KeyDef {                                                                                     \
    NAME, [](RunConfig& c, const json& v) { c.FIELD = as_optional_real(NAME, v); },            \
        [](const RunConfig& c) { return optional_json(c.FIELD); }                              \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      RYD_KEY("geometry.N", geometry.N, as_int),
      RYD_KEY("geometry.d_um", geometry.d_um, as_real),
      RYD_KEY("geometry.theta_deg", geometry.theta_deg, as_real),
      RYD_KEY("geometry.position_sigma_um", geometry.position_sigma_um, as_real),
      RYD_KEY("physics.omega_MHz", physics.omega_mhz, as_real),
      RYD_KEY("physics.delta_MHz", physics.delta_mhz, as_real),
      RYD_KEY("physics.C6_GHz_um6", physics.c6_ghz_um6, as_real),
      RYD_OPT_KEY("physics.v12_override_MHz", physics.v12_override_mhz),
      KeyDef{"backend.kind",
             [](RunConfig& c, const json& v) {
               const std::string s = as_string("backend.kind", v);
               if (s == "ed") c.backend.kind = BackendKind::kEd;
               else if (s == "lindblad") c.backend.kind = BackendKind::kLindblad;
               else if (s == "mps") c.backend.kind = BackendKind::kMps;
               else invalid("backend.kind", "expected ed, lindblad or mps, got '" + s + "'");
             },
             [](const RunConfig& c) { return json(to_string(c.backend.kind)); }},
      KeyDef{"backend.method",
             [](RunConfig& c, const json& v) {
               const std::string s = as_string("backend.method", v);
               if (s != "krylov" && s != "dense") invalid("backend.method", "expected krylov or dense");
               c.backend.method = s;
             },
             [](const RunConfig& c) { return json(c.backend.method); }},
      RYD_KEY("backend.krylov_dim", backend.krylov_dim, as_int),
      RYD_KEY("backend.krylov_tol", backend.krylov_tol, as_real),
      RYD_KEY("backend.interaction_range", backend.interaction_range, as_int),
      RYD_KEY("backend.omega_dt", backend.omega_dt, as_real),
      RYD_KEY("backend.chi_max", backend.chi_max, as_int),
      RYD_KEY("backend.mps_tol", backend.mps_tol, as_real),
      RYD_KEY("backend.max_sweeps", backend.max_sweeps, as_int),
      RYD_KEY("backend.shots", backend.shots, as_int),
      RYD_KEY("backend.seed", backend.seed, as_uint),
      RYD_KEY("backend.shot_offset", backend.shot_offset, as_uint),
      RYD_KEY("backend.gamma_kHz", backend.gamma_khz, as_real),
      RYD_KEY("backend.gamma_c_kHz", backend.gamma_c_khz, as_real),
      RYD_KEY("backend.d_omega_MHz", backend.d_omega_mhz, as_real),
      RYD_KEY("backend.d_delta_MHz", backend.d_delta_mhz, as_real),
      RYD_KEY("backend.tail_cut", backend.tail_cut, as_real),
      RYD_KEY("backend.threads", backend.threads, as_int),
      RYD_KEY("schedule.t_max_us", schedule.t_max_us, as_real),
      RYD_KEY("schedule.dt_out_us", schedule.dt_out_us, as_real),
      RYD_OPT_KEY("schedule.t_relax_us", schedule.t_relax_us),
      RYD_KEY("census.enabled", census.enabled, as_bool),
      RYD_KEY("census.max_sites", census.max_sites, as_int),
      RYD_KEY("master.t_early_us", master.t_early_us, as_real),
      RYD_KEY("master.restarts", master.restarts, as_int),
      RYD_KEY("master.max_rms", master.max_rms, as_real),
      RYD_KEY("master.epsilon", master.epsilon, as_real),
      RYD_KEY("master.running_average_us", master.running_average_us, as_real),
      RYD_OPT_KEY("analysis.freq_t0_us", analysis.freq_t0_us),
      RYD_OPT_KEY("analysis.freq_t1_us", analysis.freq_t1_us),
      RYD_KEY("analysis.eth", analysis.eth, as_bool),
      RYD_KEY("analysis.eth_site", analysis.eth_site, as_int),
      RYD_KEY("outputs.directory", outputs.directory, as_string),
      RYD_KEY("outputs.emit_cm2", outputs.emit_cm2, as_bool),
  };
  return table;
}

#undef RYD_KEY
#undef RYD_OPT_KEY

const KeyDef& find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.name == key) return k;
  invalid(key, "unknown key");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Literal from the text grammar; throws config-parse for broken quoting.
json text_value(const std::string& raw, int line) {
  const std::string v = trim(raw);
  if (v.empty()) throw Error(ErrorKind::kConfigParse, "line " + std::to_string(line) + ": missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw Error(ErrorKind::kConfigParse, "line " + std::to_string(line) + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v == "none" || v == "null") return nullptr;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (v.find_first_of(".eEnN") == std::string::npos) {
    if (v.front() != '-') {
      std::uint64_t u = 0;
      if (auto [p, ec] = std::from_chars(first, last, u); ec == std::errc() && p == last) return u;
    } else {
      std::int64_t i = 0;
      if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) return i;
    }
  }
  double x = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, x); ec == std::errc() && p == last) return x;
  return v;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      if (v.is_array()) invalid(key, "list values are not supported");
      if (!out.emplace(key, v).second) invalid(key, "set twice");
    }
  }
}

RunConfig apply_entries(const std::map<std::string, json>& entries) {
  RunConfig c;
  for (const auto& [k, v] : entries) find_key(k).set(c, v);
  validate(c);
  return c;
}

RunConfig parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfigParse, e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::kConfigParse, "top-level JSON value must be an object");
  if (j.contains("manifest_version") && j.contains("config")) j = j.at("config");
  std::map<std::string, json> entries;
  flatten(j, "", entries);
  return apply_entries(entries);
}

RunConfig parse_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::string section;
  std::map<std::string, json> entries;
  for (int n = 1; std::getline(is, line); ++n) {
    // Comments run to end of line unless inside a quoted value.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (!quoted && (line[i] == '#' || line[i] == ';')) {
        line.resize(i);
        break;
      }
    }
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3)
        throw Error(ErrorKind::kConfigParse, "line " + std::to_string(n) + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.") != std::string::npos)
        throw Error(ErrorKind::kConfigParse, "line " + std::to_string(n) + ": malformed section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::kConfigParse, "line " + std::to_string(n) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t") != std::string::npos)
      throw Error(ErrorKind::kConfigParse, "line " + std::to_string(n) + ": malformed key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!entries.emplace(full, text_value(s.substr(eq + 1), n)).second) invalid(full, "set twice");
  }
  return apply_entries(entries);
}

}  // namespace

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kEd: return "ed";
    case BackendKind::kLindblad: return "lindblad";
    case BackendKind::kMps: return "mps";
  }
  return "ed";
}

RunConfig parse_config(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json(text);
  return parse_text(text);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kConfigParse, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_key(key).set(config, text_value(value, 0));
}

nlohmann::json to_json(const RunConfig& config) {
  json j = json::object();
  for (const auto& k : key_table()) j[k.name] = k.get(config);
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& k : key_table()) keys.push_back(k.name);
  return keys;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) invalid(key, what);
  };
  require(c.geometry.N >= 1, "geometry.N", "must be >= 1");
  require(c.geometry.d_um > 0.0, "geometry.d_um", "must be > 0");
  require(c.geometry.theta_deg > 0.0 && c.geometry.theta_deg <= 180.0, "geometry.theta_deg", "must lie in (0, 180]");
  require(c.geometry.position_sigma_um >= 0.0, "geometry.position_sigma_um", "must be >= 0");
  require(c.physics.omega_mhz >= 0.0, "physics.omega_MHz", "must be >= 0");
  require(c.physics.c6_ghz_um6 != 0.0, "physics.C6_GHz_um6", "must be nonzero");
  require(!c.physics.v12_override_mhz || *c.physics.v12_override_mhz > 0.0, "physics.v12_override_MHz",
          "must be > 0 or none");
  require(c.backend.krylov_dim >= 2, "backend.krylov_dim", "must be >= 2");
  require(c.backend.krylov_tol > 0.0, "backend.krylov_tol", "must be > 0");
  require(c.backend.interaction_range >= 0, "backend.interaction_range", "must be >= 0");
  require(c.backend.omega_dt > 0.0, "backend.omega_dt", "must be > 0");
  require(c.backend.chi_max >= 1, "backend.chi_max", "must be >= 1");
  require(c.backend.mps_tol > 0.0, "backend.mps_tol", "must be > 0");
  require(c.backend.max_sweeps >= 1, "backend.max_sweeps", "must be >= 1");
  require(c.backend.shots >= 1, "backend.shots", "must be >= 1");
  require(c.backend.gamma_khz >= 0.0, "backend.gamma_kHz", "must be >= 0");
  require(c.backend.gamma_c_khz >= 0.0, "backend.gamma_c_kHz", "must be >= 0");
  require(c.backend.d_omega_mhz >= 0.0, "backend.d_omega_MHz", "must be >= 0");
  require(c.backend.d_delta_mhz >= 0.0, "backend.d_delta_MHz", "must be >= 0");
  require(c.backend.tail_cut > 0.0, "backend.tail_cut", "must be > 0");
  require(c.backend.threads >= 1, "backend.threads", "must be >= 1");
  require(c.backend.kind != BackendKind::kMps || (c.backend.shots == 1 && c.backend.d_omega_mhz == 0.0 &&
                                                  c.backend.d_delta_mhz == 0.0 && c.geometry.position_sigma_um == 0.0),
          "backend.kind", "mps does not support shot noise");
  require(c.backend.kind == BackendKind::kLindblad || (c.backend.gamma_khz == 0.0 && c.backend.gamma_c_khz == 0.0),
          "backend.gamma_kHz", "dephasing requires the lindblad backend");
  require(c.schedule.t_max_us > 0.0, "schedule.t_max_us", "must be > 0");
  require(c.schedule.dt_out_us > 0.0 && c.schedule.dt_out_us <= c.schedule.t_max_us, "schedule.dt_out_us",
          "must lie in (0, t_max]");
  require(!c.schedule.t_relax_us || (*c.schedule.t_relax_us >= 0.0 && *c.schedule.t_relax_us < c.schedule.t_max_us),
          "schedule.t_relax_us", "must lie in [0, t_max)");
  require(c.census.max_sites >= 1, "census.max_sites", "must be >= 1");
  require(c.master.t_early_us > 0.0, "master.t_early_us", "must be > 0");
  require(c.master.restarts >= 1, "master.restarts", "must be >= 1");
  require(c.master.max_rms > 0.0, "master.max_rms", "must be > 0");
  require(c.master.epsilon > 0.0, "master.epsilon", "must be > 0");
  require(c.master.running_average_us > 0.0, "master.running_average_us", "must be > 0");
  require(c.analysis.eth_site < c.geometry.N, "analysis.eth_site", "must be < N");
}

double resolved_t_relax(const RunConfig& config) {
  return config.schedule.t_relax_us.value_or(default_t_relax(config.geometry.theta_deg));
}

}  // namespace rydchain
