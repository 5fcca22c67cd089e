#pragma once

#include <algorithm>
#include <cmath>

#include "agmec/error.hpp"

namespace agmec {

/// Offloading decision X.
enum class Offload : int { none = 0, local = 1, server = 2, uav = 3 };

/// Association I of one MU. BSs are 0..B-1 and the UAV is B. `previous` is
/// the value committed in the last epoch.
struct AssociationState {
  int current = 0;
  int previous = 0;
  bool handover() const { return current != previous; }
};

/// Association for this epoch given the last committed value, the BS covering
/// the MU's current cell and the decision. Unscheduled epochs follow the
/// tracking rule (UAV association sticks, BS association follows coverage);
/// scheduling to the server or the UAV retargets the association.
inline AssociationState update_association(int previous, int serving_bs, Offload decision,
                                           int bs_count)
{
  if (previous < 0 || previous > bs_count || serving_bs < 0 || serving_bs >= bs_count)
    throw ConfigError("association out of range");
  int next = previous == bs_count ? bs_count : serving_bs;
  if (decision == Offload::server) next = serving_bs;
  if (decision == Offload::uav) next = bs_count;
  return {next, previous};
}

/// Effective transmission time δ̃ = δ − ξ·1{handover}.
inline double transmission_time(double epoch, double handover_delay, bool handover)
{
  return handover ? epoch - handover_delay : epoch;
}

/// Energy to push `packets` packets of `bits_per_packet` bits over one channel
/// in `tx_time` seconds at gain `gain`.
inline double tx_energy(double gain, double tx_time, double bandwidth, double noise_density,
                        int packets, double bits_per_packet)
{
  if (packets <= 0) return 0.0;
  const double bits = bits_per_packet * packets;
  return tx_time * bandwidth * noise_density / gain *
         (std::exp2(bits / (bandwidth * tx_time)) - 1.0);
}

/// Largest packet count whose energy stays within P_max·δ̃, capped at the
/// backlog. The closed form is corrected by one step either way so the
/// energy bound holds exactly in floating point.
inline int max_packets(double gain, double tx_time, double bandwidth, double noise_density,
                       double max_power, double bits_per_packet, int backlog)
{
  if (backlog <= 0 || !(gain > 0) || !(tx_time > 0)) return 0;
  const double budget = max_power * tx_time;
  const double snr = max_power * gain / (bandwidth * noise_density);
  const double limit = bandwidth * tx_time / bits_per_packet * std::log2(1.0 + snr);
  int r = static_cast<int>(std::clamp(std::floor(limit), 0.0, static_cast<double>(backlog) + 1.0));
  auto energy = [&](int n) {
    return tx_energy(gain, tx_time, bandwidth, noise_density, n, bits_per_packet);
  };
  while (r > 0 && energy(r) > budget) --r;
  while (r <= backlog && energy(r + 1) <= budget) ++r;
  return r < backlog ? r : backlog;
}

}  // namespace agmec
