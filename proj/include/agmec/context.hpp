#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "agmec/compute.hpp"
#include "agmec/config.hpp"
#include "agmec/error.hpp"
#include "agmec/link.hpp"
#include "agmec/world.hpp"

namespace agmec {

/// (z or realised φ, X, R).
struct Action {
  int z = 0;
  Offload x = Offload::none;
  int r = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

inline int action_count(int packets_per_task) { return 8 * (packets_per_task + 1); }

inline int action_index(const Action& a, int packets_per_task)
{
  return (a.z * 4 + static_cast<int>(a.x)) * (packets_per_task + 1) + a.r;
}

inline Action action_from_index(int index, int packets_per_task)
{
  if (index < 0 || index >= action_count(packets_per_task)) throw ConfigError("action index out of range");
  const int span = packets_per_task + 1;
  return Action{index / (4 * span), static_cast<Offload>(index / span % 4), index % span};
}

/// Everything the simulator tracks for one MU between epochs.
struct UserState {
  TaskBuffer buffer;
  ProcessorState proc;
  int association = 0;       // committed I of the previous epoch
  double aoi = 0.0;          // A at the start of the epoch
  double last_payment = 0.0; // conjecture: last payment observed
  double last_rate = 0.0;    // conjecture: last VM service rate observed
};

/// What the MU observes at the start of an epoch.
struct LocalState {
  int uav_cell = 0;
  int mu_cell = 0;
  bool has_task = false;
  int association = 0;
  int cpu_remaining = 0;
  double uav_bits = 0.0;
  int backlog = 0;
  double aoi = 0.0;
  double last_payment = 0.0;
  double last_rate = 0.0;

  friend bool operator==(const LocalState&, const LocalState&) = default;
};

inline LocalState observe(const UserState& u, Location uav, Location mu)
{
  return LocalState{uav.cell,          mu.cell,          !u.buffer.empty(), u.association,
                    u.proc.cpu_remaining, u.proc.uav_bits, u.proc.backlog,    u.aoi,
                    u.last_payment,    u.last_rate};
}

/// Upload target of the packets sent this epoch.
enum class Destination { none, server, uav };

/// Per-epoch quantities of one MU for each offloading decision X, computed
/// before actions are chosen. Bids, masks, baselines and the realised step
/// all read from here so they agree on energies and capacities.
struct ActionContext {
  int packets_per_task = 0;
  double aoi = 0.0;
  std::array<bool, 4> feasible{};
  std::array<int, 4> association{};
  std::array<bool, 4> handover{};
  std::array<double, 4> tx_time{};
  std::array<int, 4> backlog{};        // D after scheduling
  std::array<Destination, 4> dest{};
  std::array<double, 4> gain{};        // gain towards dest, 0 if none
  std::array<int, 4> max_packets{};    // R_max' capped at backlog
  std::array<double, 4> cpu_energy{};  // local CPU energy of this epoch
  double gain_bs = 0.0;
  double gain_uav = 0.0;
  WorldConfig cfg;

  int limit(Offload x) const
  {
    const int i = static_cast<int>(x);
    return std::min(backlog[i], max_packets[i]);
  }

  bool allowed(const Action& a) const
  {
    const int i = static_cast<int>(a.x);
    if (i < 0 || i > 3 || !feasible[i]) return false;
    if (a.z == 0) return a.r == 0;  // nothing is sent without a channel
    return a.z == 1 && a.r >= 1 && a.r <= limit(a.x);
  }

  std::vector<char> mask() const
  {
    std::vector<char> m(action_count(packets_per_task), 0);
    for (int i = 0; i < static_cast<int>(m.size()); ++i)
      m[i] = allowed(action_from_index(i, packets_per_task)) ? 1 : 0;
    return m;
  }

  double transmit_energy(Offload x, int sent) const
  {
    const int i = static_cast<int>(x);
    if (sent <= 0) return 0.0;
    return tx_energy(gain[i], tx_time[i], cfg.bandwidth, cfg.noise_density, sent, cfg.bits_per_packet);
  }

  /// Total energy F for decision x with `sent` packets delivered.
  double energy(Offload x, int sent) const
  {
    return cpu_energy[static_cast<int>(x)] + transmit_energy(x, sent);
  }

  /// u for decision x if `sent` packets go out this epoch.
  double utility(Offload x, int sent) const
  {
    return payoff(aoi, energy(x, sent), 0.0, cfg.aoi_weight, cfg.energy_weight).utility;
  }
};

inline ActionContext make_context(const WorldConfig& w, int delta, const UserState& u, int bs_count,
                                  int serving_bs, double gain_bs, double gain_uav)
{
  ActionContext c;
  c.cfg = w;
  c.packets_per_task = w.packets_per_task;
  c.aoi = u.aoi;
  c.gain_bs = gain_bs;
  c.gain_uav = gain_uav;
  const bool task = !u.buffer.empty();
  const auto& p = u.proc;
  c.feasible = {true, task && p.cpu_remaining == 0, task && p.backlog == 0,
                task && p.backlog == 0 && p.uav_bits <= 0.0};
  for (int i = 0; i < 4; ++i) {
    const auto x = static_cast<Offload>(i);
    const auto a = update_association(u.association, serving_bs, x, bs_count);
    c.association[i] = a.current;
    c.handover[i] = a.handover();
    c.tx_time[i] = transmission_time(w.epoch_duration, w.handover_delay, a.handover());
    c.backlog[i] = (x == Offload::server || x == Offload::uav) ? w.packets_per_task : p.backlog;
    if (c.backlog[i] > 0)
      c.dest[i] = a.current == bs_count ? Destination::uav : Destination::server;
    else
      c.dest[i] = Destination::none;
    c.gain[i] = c.dest[i] == Destination::uav ? gain_uav : c.dest[i] == Destination::server ? gain_bs : 0.0;
    c.max_packets[i] = c.dest[i] == Destination::none
                           ? 0
                           : agmec::max_packets(c.gain[i], c.tx_time[i], w.bandwidth, w.noise_density,
                                                w.max_tx_power, w.bits_per_packet, c.backlog[i]);
    c.cpu_energy[i] = local_cpu_energy(x == Offload::local ? delta : p.cpu_remaining, w, delta);
  }
  return c;
}

/// Outcome of scheduling, transmitting and running the local CPU for one MU.
struct TransmitOutcome {
  double energy = 0.0;
  int sent = 0;
  bool server_done = false;
  std::int64_t server_arrival = 0;
  bool uav_upload_done = false;  // load D_max·μ bits at the UAV after its step
  std::int64_t uav_upload_arrival = 0;
  bool cpu_done = false;
  std::int64_t cpu_arrival = 0;
};

/// Applies the realised action (φ = a.z) to the MU's pipelines. The UAV VM
/// step is global and happens afterwards; see load_uav_job.
inline TransmitOutcome schedule_and_transmit(UserState& u, const ActionContext& c, const Action& a,
                                             int delta)
{
  if (!c.allowed(a)) throw ConfigError("action not allowed in this state");
  const int xi = static_cast<int>(a.x);
  const auto& w = c.cfg;
  TransmitOutcome out;
  auto& p = u.proc;
  if (a.x == Offload::local) {
    p.cpu_remaining = delta;
    p.cpu_arrival = u.buffer.arrival;
    u.buffer.arrival = 0;
  } else if (a.x == Offload::server || a.x == Offload::uav) {
    p.backlog = w.packets_per_task;
    p.upload_arrival = u.buffer.arrival;
    u.buffer.arrival = 0;
  }
  u.association = c.association[xi];

  out.sent = a.z * a.r;
  out.energy = c.transmit_energy(a.x, out.sent);
  p.backlog -= out.sent;
  if (out.sent > 0 && p.backlog == 0) {
    if (c.dest[xi] == Destination::server) {
      out.server_done = true;
      out.server_arrival = p.upload_arrival;
    } else {
      out.uav_upload_done = true;
      out.uav_upload_arrival = p.upload_arrival;
    }
    p.upload_arrival = 0;
  }

  const std::int64_t cpu_arrival = p.cpu_arrival;
  const auto cpu = local_cpu_step(p, w, delta);
  out.energy += cpu.energy;
  if (cpu.completed) {
    out.cpu_done = true;
    out.cpu_arrival = cpu_arrival;
    p.cpu_arrival = 0;
  }
  return out;
}

/// Starts the VM job of a finished UAV upload; it executes from next epoch on.
inline void load_uav_job(UserState& u, const TransmitOutcome& t, const WorldConfig& w)
{
  if (!t.uav_upload_done) return;
  if (u.proc.uav_bits > 0) throw std::logic_error("UAV VM still busy when a new job arrives");
  u.proc.uav_bits = w.packets_per_task * w.bits_per_packet;
  u.proc.uav_arrival = t.uav_upload_arrival;
}

/// Completion events of one MU this epoch, for aoi_step.
inline std::vector<Completion> completions_of(const TransmitOutcome& t, const UavStep& uav, std::size_t user)
{
  std::vector<Completion> done;
  if (t.cpu_done) done.push_back({Pipeline::local, t.cpu_arrival, 0.0});
  if (t.server_done) done.push_back({Pipeline::server, t.server_arrival, 0.0});
  for (const auto& c : uav.completions)
    if (c.user == user) done.push_back({Pipeline::uav, c.arrival, c.residual});
  return done;
}

}  // namespace agmec
