#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "agmec/error.hpp"

namespace agmec {

/// Physical system. Defaults are the full-scale experiment values.
struct WorldConfig {
  int grid_cols = 40;
  int grid_rows = 40;
  double cell_size = 10.0;  // m
  int bs_count = 4;
  // "x:y;x:y;..." in meters. Empty: BSs on a square lattice of cell-block centers.
  std::string bs_positions;
  // "a-b;c-d;..." (0-based). Empty: rook adjacency of the lattice.
  std::string bs_edges;
  int num_users = 20;
  double uav_altitude = 100.0;         // m
  double epoch_duration = 1.0;         // s
  int channels = 16;
  double bandwidth = 1e6;              // Hz
  double noise_density = 3.981071705534973e-18;  // W/Hz, -144 dBm/Hz
  double arrival_prob = 0.3;
  int packets_per_task = 10;
  double bits_per_packet = 5e5;
  double cycles_per_bit = 1300.0;
  double cpu_frequency = 1e9;          // Hz
  double capacitance = 1e-27;
  double handover_delay = 0.01;        // s
  double aoi_max = 30.0;               // s
  double max_tx_power = 3.0;           // W
  double vm_rate = 2e7;                // bits/s
  double vm_interference = 0.2;
  double aoi_weight = 10.0;
  double energy_weight = 2.0;
  double discount = 0.9;
  double ground_gain_ref = 1e-4;
  double ground_exponent = 3.8;
  double uav_gain_ref = 1.4e-4;
  double uav_exponent = 2.0;
  std::uint64_t seed = 1;
};

struct LearnConfig {
  int hidden_units = 32;
  int hidden_layers = 2;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 200;
  int replay_capacity = 5000;
  int target_sync_period = 100;
  double epsilon_start = 1.0;
  double epsilon_end = 0.02;
  double epsilon_decay_fraction = 0.5;
};

struct RunConfig {
  long epochs = 10000;
  std::string scheme = "deeprl";
  double eval_fraction = 0.5;
};

struct SweepConfig {
  std::vector<double> lambda_grid{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<int> channel_grid{4, 8, 12, 16, 20};
  std::vector<int> batch_grid{50, 100, 200, 300};
  double sweep_lambda = 0.5;  // fixed λ of the channel sweep
  int sweep_channels = 16;    // fixed |C| of the λ sweep
};

struct SimConfig {
  WorldConfig world;
  LearnConfig learn;
  RunConfig run;
  SweepConfig sweep;
};

/// Full-scale profile (20 MUs, 40x40 cells, 2x32 networks, |Y|=200, M=5000).
inline SimConfig full_profile() { return SimConfig{}; }

/// Desk-scale profile used by the tests: 3 MUs on an 8x8 grid of 50 m cells,
/// 4 BSs, 2 channels, D_max = 4, 2e4 epochs.
inline SimConfig desk_profile()
{
  SimConfig c;
  c.world.grid_cols = 8;
  c.world.grid_rows = 8;
  c.world.cell_size = 50.0;
  c.world.num_users = 3;
  c.world.channels = 2;
  c.world.packets_per_task = 4;
  c.world.arrival_prob = 0.5;
  c.learn.learning_rate = 3e-4;
  c.learn.batch_size = 32;
  c.learn.replay_capacity = 5000;
  c.run.epochs = 20000;
  c.sweep.lambda_grid = {0.0, 0.3, 0.5, 0.8};
  c.sweep.channel_grid = {1, 2, 4};
  c.sweep.batch_grid = {8, 32, 64};
  c.sweep.sweep_channels = 2;
  return c;
}

namespace detail {

inline std::string format_value(double v)
{
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}
inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(long v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(const std::string& v) { return v; }

template <typename T>
std::string format_value(const std::vector<T>& v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_value(v[i]);
  }
  return out;
}

inline std::string_view trim(std::string_view s)
{
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_number(std::string_view s, T& out)
{
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

inline bool parse_value(std::string_view s, double& out)
{
  return parse_number(s, out) && std::isfinite(out);
}
inline bool parse_value(std::string_view s, int& out) { return parse_number(s, out); }
inline bool parse_value(std::string_view s, long& out) { return parse_number(s, out); }
inline bool parse_value(std::string_view s, std::uint64_t& out) { return parse_number(s, out); }
inline bool parse_value(std::string_view s, std::string& out)
{
  out = std::string(trim(s));
  return true;
}

template <typename T>
bool parse_value(std::string_view s, std::vector<T>& out)
{
  out.clear();
  s = trim(s);
  if (s.empty()) return true;
  while (true) {
    const auto comma = s.find(',');
    T v{};
    if (!parse_value(s.substr(0, comma), v)) return false;
    out.push_back(v);
    if (comma == std::string_view::npos) return true;
    s.remove_prefix(comma + 1);
  }
}

}  // namespace detail

struct ConfigKey {
  std::string_view name;
  std::function<bool(SimConfig&, std::string_view)> set;
  std::function<std::string(const SimConfig&)> get;
};

namespace detail {

template <typename Access>
ConfigKey make_key(std::string_view name, Access access)
{
  return ConfigKey{
      name,
      [access](SimConfig& c, std::string_view v) { return parse_value(v, access(c)); },
      [access](const SimConfig& c) { return format_value(access(const_cast<SimConfig&>(c))); }};
}

}  // namespace detail

/// Every accepted key, in dump order.
inline const std::vector<ConfigKey>& config_keys()
{
  using detail::make_key;
  static const std::vector<ConfigKey> keys = {
      make_key("grid_cols", [](SimConfig& c) -> auto& { return c.world.grid_cols; }),
      make_key("grid_rows", [](SimConfig& c) -> auto& { return c.world.grid_rows; }),
      make_key("cell_size", [](SimConfig& c) -> auto& { return c.world.cell_size; }),
      make_key("bs_count", [](SimConfig& c) -> auto& { return c.world.bs_count; }),
      make_key("bs_positions", [](SimConfig& c) -> auto& { return c.world.bs_positions; }),
      make_key("bs_edges", [](SimConfig& c) -> auto& { return c.world.bs_edges; }),
      make_key("num_users", [](SimConfig& c) -> auto& { return c.world.num_users; }),
      make_key("uav_altitude", [](SimConfig& c) -> auto& { return c.world.uav_altitude; }),
      make_key("epoch_duration", [](SimConfig& c) -> auto& { return c.world.epoch_duration; }),
      make_key("channels", [](SimConfig& c) -> auto& { return c.world.channels; }),
      make_key("bandwidth", [](SimConfig& c) -> auto& { return c.world.bandwidth; }),
      make_key("noise_density", [](SimConfig& c) -> auto& { return c.world.noise_density; }),
      make_key("arrival_prob", [](SimConfig& c) -> auto& { return c.world.arrival_prob; }),
      make_key("packets_per_task", [](SimConfig& c) -> auto& { return c.world.packets_per_task; }),
      make_key("bits_per_packet", [](SimConfig& c) -> auto& { return c.world.bits_per_packet; }),
      make_key("cycles_per_bit", [](SimConfig& c) -> auto& { return c.world.cycles_per_bit; }),
      make_key("cpu_frequency", [](SimConfig& c) -> auto& { return c.world.cpu_frequency; }),
      make_key("capacitance", [](SimConfig& c) -> auto& { return c.world.capacitance; }),
      make_key("handover_delay", [](SimConfig& c) -> auto& { return c.world.handover_delay; }),
      make_key("aoi_max", [](SimConfig& c) -> auto& { return c.world.aoi_max; }),
      make_key("max_tx_power", [](SimConfig& c) -> auto& { return c.world.max_tx_power; }),
      make_key("vm_rate", [](SimConfig& c) -> auto& { return c.world.vm_rate; }),
      make_key("vm_interference", [](SimConfig& c) -> auto& { return c.world.vm_interference; }),
      make_key("aoi_weight", [](SimConfig& c) -> auto& { return c.world.aoi_weight; }),
      make_key("energy_weight", [](SimConfig& c) -> auto& { return c.world.energy_weight; }),
      make_key("discount", [](SimConfig& c) -> auto& { return c.world.discount; }),
      make_key("ground_gain_ref", [](SimConfig& c) -> auto& { return c.world.ground_gain_ref; }),
      make_key("ground_exponent", [](SimConfig& c) -> auto& { return c.world.ground_exponent; }),
      make_key("uav_gain_ref", [](SimConfig& c) -> auto& { return c.world.uav_gain_ref; }),
      make_key("uav_exponent", [](SimConfig& c) -> auto& { return c.world.uav_exponent; }),
      make_key("seed", [](SimConfig& c) -> auto& { return c.world.seed; }),
      make_key("hidden_units", [](SimConfig& c) -> auto& { return c.learn.hidden_units; }),
      make_key("hidden_layers", [](SimConfig& c) -> auto& { return c.learn.hidden_layers; }),
      make_key("learning_rate", [](SimConfig& c) -> auto& { return c.learn.learning_rate; }),
      make_key("adam_beta1", [](SimConfig& c) -> auto& { return c.learn.adam_beta1; }),
      make_key("adam_beta2", [](SimConfig& c) -> auto& { return c.learn.adam_beta2; }),
      make_key("adam_epsilon", [](SimConfig& c) -> auto& { return c.learn.adam_epsilon; }),
      make_key("batch_size", [](SimConfig& c) -> auto& { return c.learn.batch_size; }),
      make_key("replay_capacity", [](SimConfig& c) -> auto& { return c.learn.replay_capacity; }),
      make_key("target_sync_period", [](SimConfig& c) -> auto& { return c.learn.target_sync_period; }),
      make_key("epsilon_start", [](SimConfig& c) -> auto& { return c.learn.epsilon_start; }),
      make_key("epsilon_end", [](SimConfig& c) -> auto& { return c.learn.epsilon_end; }),
      make_key("epsilon_decay_fraction",
               [](SimConfig& c) -> auto& { return c.learn.epsilon_decay_fraction; }),
      make_key("epochs", [](SimConfig& c) -> auto& { return c.run.epochs; }),
      make_key("scheme", [](SimConfig& c) -> auto& { return c.run.scheme; }),
      make_key("eval_fraction", [](SimConfig& c) -> auto& { return c.run.eval_fraction; }),
      make_key("lambda_grid", [](SimConfig& c) -> auto& { return c.sweep.lambda_grid; }),
      make_key("channel_grid", [](SimConfig& c) -> auto& { return c.sweep.channel_grid; }),
      make_key("batch_grid", [](SimConfig& c) -> auto& { return c.sweep.batch_grid; }),
      make_key("sweep_lambda", [](SimConfig& c) -> auto& { return c.sweep.sweep_lambda; }),
      make_key("sweep_channels", [](SimConfig& c) -> auto& { return c.sweep.sweep_channels; }),
  };
  return keys;
}

/// Throws ConfigError naming the first violated constraint.
inline void validate(const SimConfig& c)
{
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid config: ") + what);
  };
  const auto& w = c.world;
  require(w.grid_cols >= 1 && w.grid_rows >= 1, "grid_cols and grid_rows must be >= 1");
  require(w.cell_size > 0, "cell_size must be > 0");
  require(w.bs_count >= 1 && w.bs_count <= 16, "bs_count must be in [1, 16]");
  require(w.num_users >= 1, "num_users must be >= 1");
  require(w.uav_altitude > 0, "uav_altitude must be > 0");
  require(w.handover_delay >= 0 && w.epoch_duration > w.handover_delay,
          "need epoch_duration > handover_delay >= 0");
  require(w.channels >= 1, "channels must be >= 1");
  require(w.bandwidth > 0 && w.noise_density > 0, "bandwidth and noise_density must be > 0");
  require(w.arrival_prob >= 0 && w.arrival_prob <= 1, "arrival_prob must be in [0, 1]");
  require(w.packets_per_task >= 1, "packets_per_task must be >= 1");
  require(w.bits_per_packet > 0 && w.cycles_per_bit > 0 && w.cpu_frequency > 0,
          "bits_per_packet, cycles_per_bit and cpu_frequency must be > 0");
  require(w.capacitance >= 0, "capacitance must be >= 0");
  require(w.aoi_max > 0, "aoi_max must be > 0");
  require(w.max_tx_power > 0, "max_tx_power must be > 0");
  require(w.vm_rate > 0 && w.vm_interference >= 0, "vm_rate > 0 and vm_interference >= 0");
  require(w.aoi_weight >= 0 && w.energy_weight >= 0, "weights must be >= 0");
  require(w.discount >= 0 && w.discount < 1, "discount must be in [0, 1)");
  require(w.ground_gain_ref > 0 && w.uav_gain_ref > 0, "gain references must be > 0");
  require(w.ground_exponent >= 0 && w.uav_exponent >= 0, "path-loss exponents must be >= 0");
  const auto& l = c.learn;
  require(l.hidden_units >= 1 && l.hidden_layers >= 1, "network must have hidden units");
  require(l.learning_rate > 0, "learning_rate must be > 0");
  require(l.adam_beta1 >= 0 && l.adam_beta1 < 1 && l.adam_beta2 >= 0 && l.adam_beta2 < 1,
          "adam betas must be in [0, 1)");
  require(l.adam_epsilon > 0, "adam_epsilon must be > 0");
  require(l.batch_size >= 1 && l.replay_capacity >= l.batch_size,
          "need replay_capacity >= batch_size >= 1");
  require(l.target_sync_period >= 1, "target_sync_period must be >= 1");
  require(l.epsilon_start >= 0 && l.epsilon_start <= 1 && l.epsilon_end >= 0 &&
              l.epsilon_end <= 1,
          "epsilon bounds must be in [0, 1]");
  require(l.epsilon_decay_fraction >= 0 && l.epsilon_decay_fraction <= 1,
          "epsilon_decay_fraction must be in [0, 1]");
  require(c.run.epochs >= 1, "epochs must be >= 1");
  require(c.run.eval_fraction > 0 && c.run.eval_fraction <= 1, "eval_fraction must be in (0, 1]");
}

/// Parses key=value text on top of `base`. Blank lines and '#' comments are
/// skipped; unknown keys and malformed values are errors.
inline SimConfig parse_config(std::istream& in, const std::string& source,
                              SimConfig base = full_profile())
{
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = detail::trim(line);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, lineno, "expected key=value");
    const auto key = detail::trim(s.substr(0, eq));
    const auto value = s.substr(eq + 1);
    bool found = false;
    for (const auto& k : config_keys()) {
      if (k.name != key) continue;
      found = true;
      if (!k.set(base, value))
        throw ParseError(source, lineno, "bad value for '" + std::string(key) + "'");
    }
    if (!found) throw ParseError(source, lineno, "unknown key '" + std::string(key) + "'");
  }
  validate(base);
  return base;
}

inline SimConfig load_config(const std::string& path, SimConfig base = full_profile())
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path, std::move(base));
}

inline std::string dump_config(const SimConfig& c)
{
  std::string out;
  for (const auto& k : config_keys()) {
    out += k.name;
    out += " = ";
    out += k.get(c);
    out += '\n';
  }
  return out;
}

/// FNV-1a over the canonical dump; stable across platforms.
inline std::uint64_t config_hash(const SimConfig& c)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace agmec
