#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "agmec/config.hpp"
#include "agmec/error.hpp"

namespace agmec {

/// Per-MU processing pipelines. Arrival indices are absolute epoch numbers
/// (0 = no task). The upload destination is not stored here: it follows from
/// the association state.
struct ProcessorState {
  int cpu_remaining = 0;             // W_m, epochs left on the local CPU
  std::int64_t cpu_arrival = 0;      // T_m
  int backlog = 0;                   // D, packets left at the transmitter
  std::int64_t upload_arrival = 0;   // T_s or T_v while uploading
  double uav_bits = 0.0;             // W_v, bits left at the UAV VM
  std::int64_t uav_arrival = 0;      // T_v while executing at the UAV
};

inline double task_cycles(const WorldConfig& w)
{
  return w.packets_per_task * w.bits_per_packet * w.cycles_per_bit;
}

/// Δ = ⌈D_max·μ·ϑ / (δ·ϱ)⌉, evaluated so that Δ·δ·ϱ ≥ work > (Δ−1)·δ·ϱ
/// holds for the doubles involved.
inline int local_epochs_required(const WorldConfig& w)
{
  if (!(w.cpu_frequency > 0) || !(w.epoch_duration > 0)) throw ConfigError("cpu_frequency must be > 0");
  const double work = task_cycles(w);
  const double per_epoch = w.epoch_duration * w.cpu_frequency;
  auto n = static_cast<long>(std::ceil(work / per_epoch));
  while (n > 1 && (n - 1) * per_epoch >= work) --n;
  while (n * per_epoch < work) ++n;
  return static_cast<int>(std::max(1L, n));
}

/// Local CPU energy for an epoch that starts with `remaining` epochs to go.
inline double local_cpu_energy(int remaining, const WorldConfig& w, int delta)
{
  if (remaining <= 0) return 0.0;
  const double f = w.cpu_frequency;
  if (remaining == 1)
    return w.capacitance * (task_cycles(w) - (delta - 1) * w.epoch_duration * f) * f * f;
  return w.capacitance * w.epoch_duration * f * f * f;
}

struct CpuStep {
  double energy = 0.0;
  bool completed = false;
};

/// Runs the local CPU for one epoch.
inline CpuStep local_cpu_step(ProcessorState& s, const WorldConfig& w, int delta)
{
  if (s.cpu_remaining < 0 || s.cpu_remaining > delta) throw ConfigError("cpu countdown out of range");
  CpuStep out{local_cpu_energy(s.cpu_remaining, w, delta), false};
  if (s.cpu_remaining > 0 && --s.cpu_remaining == 0) out.completed = true;
  return out;
}

/// χ = χ_0·(1+ε)^(1−n) for n ≥ 1 concurrently executing VMs.
inline double vm_service_rate(double isolated_rate, double interference, int active_vms)
{
  if (active_vms < 1) throw ConfigError("vm_service_rate needs at least one active VM");
  return isolated_rate * std::pow(1.0 + interference, 1 - active_vms);
}

struct UavCompletion {
  std::size_t user = 0;
  std::int64_t arrival = 0;
  double residual = 0.0;  // seconds of the final epoch used, W_v/χ
};

struct UavStep {
  int active = 0;
  double rate = 0.0;  // χ of this epoch, 0 when no VM is active
  std::vector<UavCompletion> completions;
};

/// Advances every VM with W_v > 0 by χ(n)·δ bits, n being the number of such
/// VMs. Jobs loaded during this epoch must be added after this call.
inline UavStep uav_processing_step(std::span<ProcessorState> users, double isolated_rate,
                                   double interference, double epoch)
{
  UavStep out;
  for (const auto& u : users)
    if (u.uav_bits > 0) ++out.active;
  if (out.active == 0) return out;
  out.rate = vm_service_rate(isolated_rate, interference, out.active);
  const double served = out.rate * epoch;
  for (std::size_t k = 0; k < users.size(); ++k) {
    auto& u = users[k];
    if (u.uav_bits <= 0) continue;
    if (u.uav_bits <= served) {
      out.completions.push_back({k, u.uav_arrival, u.uav_bits / out.rate});
      u.uav_bits = 0.0;
      u.uav_arrival = 0;
    } else {
      u.uav_bits -= served;
    }
  }
  return out;
}

enum class Pipeline { local, server, uav };

/// A computation outcome received during the epoch.
struct Completion {
  Pipeline pipeline = Pipeline::local;
  std::int64_t arrival = 0;
  double residual = 0.0;  // UAV only
};

/// AoI at the start of epoch j+1. No outcome: grows by δ. Otherwise the
/// outcome of the freshest task (largest arrival index) sets the age:
///   local  (j − T_m − Δ + 1)·δ + D_max·μ·ϑ/ϱ
///   server (j − T_s + 1)·δ
///   UAV    (j − T_v)·δ + W_v/χ
/// The result is clamped to [0, A_max].
inline double aoi_step(double aoi, std::span<const Completion> done, std::int64_t epoch,
                       const WorldConfig& w, int delta)
{
  const double dt = w.epoch_duration;
  double next = aoi + dt;
  const Completion* fresh = nullptr;
  bool seen[3] = {false, false, false};
  for (const auto& c : done) {
    const auto p = static_cast<int>(c.pipeline);
    if (c.arrival < 1 || c.arrival > epoch || seen[p])
      throw std::logic_error("aoi_step: inconsistent completion event");
    seen[p] = true;
    if (!fresh || c.arrival > fresh->arrival) fresh = &c;
  }
  if (fresh) {
    const auto age = static_cast<double>(epoch - fresh->arrival);
    switch (fresh->pipeline) {
      case Pipeline::local:
        next = (age - delta + 1) * dt + task_cycles(w) / w.cpu_frequency;
        break;
      case Pipeline::server:
        next = (age + 1) * dt;
        break;
      case Pipeline::uav:
        next = age * dt + fresh->residual;
        break;
    }
  }
  return std::clamp(next, 0.0, w.aoi_max);
}

struct Payoff {
  double utility = 0.0;
  double payoff = 0.0;
};

/// u = ϖ·exp(−A) + ω·exp(−F), ℓ = u − τ.
inline Payoff payoff(double aoi, double energy, double payment, double aoi_weight,
                     double energy_weight)
{
  const double u = aoi_weight * std::exp(-aoi) + energy_weight * std::exp(-energy);
  return {u, u - payment};
}

}  // namespace agmec
