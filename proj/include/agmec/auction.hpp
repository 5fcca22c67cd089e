#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "agmec/error.hpp"
#include "agmec/world.hpp"

namespace agmec {

/// Channel demand (N_s, N_v) of a bid; at most one channel in total.
enum class Demand { none, server, uav };

struct Bid {
  int user = 0;             // MU id, unique within an auction; orders ties
  int bs = 0;               // serving BS of the bidder
  double valuation = 0.0;   // ν ≥ 0
  Demand demand = Demand::none;

  int server_channels() const { return demand == Demand::server ? 1 : 0; }
  int uav_channels() const { return demand == Demand::uav ? 1 : 0; }
};

inline constexpr int kNoChannel = -1;

/// Everything is indexed like the bid vector it was computed from.
struct AllocationResult {
  std::vector<bool> winners;      // φ
  std::vector<int> channel;       // ρ as a channel index per bidder, kNoChannel if none
  std::vector<double> payments;   // τ
  double welfare = 0.0;           // Σ φ·ν, summed in ascending MU id order

  double revenue() const { return std::accumulate(payments.begin(), payments.end(), 0.0); }
  int winner_count() const { return static_cast<int>(std::count(winners.begin(), winners.end(), true)); }
};

/// Constraints (1)–(5) on a channel assignment. Constraint (5) is implied by
/// the one-channel-per-bidder representation.
inline bool check_feasible_allocation(std::span<const int> channel, std::span<const Bid> bids,
                                      const Topology& topo, int channels)
{
  if (channel.size() != bids.size()) return false;
  struct Use {
    int uav = 0;
    std::vector<int> per_bs;
  };
  std::vector<Use> use(std::max(channels, 0), Use{0, std::vector<int>(topo.count(), 0)});
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const int c = channel[i];
    if (c == kNoChannel) continue;
    if (c < 0 || c >= channels || bids[i].demand == Demand::none) return false;
    if (bids[i].demand == Demand::uav) {
      if (++use[c].uav > 1) return false;  // (4)
    } else {
      if (bids[i].bs < 0 || bids[i].bs >= topo.count()) return false;
      if (++use[c].per_bs[bids[i].bs] > 1) return false;  // (3)
    }
  }
  for (const auto& u : use) {
    bool any_server = false;
    for (int b = 0; b < topo.count(); ++b) {
      if (!u.per_bs[b]) continue;
      any_server = true;
      for (int b2 = b + 1; b2 < topo.count(); ++b2)
        if (u.per_bs[b2] && topo.adjacent(b, b2)) return false;  // (1)
    }
    if (any_server && u.uav) return false;  // (2)
  }
  return true;
}

namespace detail {

inline void validate_bids(std::span<const Bid> bids, const Topology& topo)
{
  std::vector<int> ids;
  for (const auto& b : bids) {
    if (!(b.valuation >= 0.0)) throw ConfigError("bid valuation must be >= 0");
    if (b.demand == Demand::server && (b.bs < 0 || b.bs >= topo.count()))
      throw ConfigError("bid references an unknown BS");
    ids.push_back(b.user);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ConfigError("bidder ids must be unique");
}

/// Σν over the set, added in ascending MU id order. Every welfare value the
/// solver and the oracle compare goes through here.
inline double canonical_welfare(std::span<const Bid> bids, std::vector<int> members,
                                std::vector<int>* sorted_ids = nullptr)
{
  std::sort(members.begin(), members.end(),
            [&](int a, int b) { return bids[a].user < bids[b].user; });
  double sum = 0.0;
  if (sorted_ids) sorted_ids->clear();
  for (int i : members) {
    sum += bids[i].valuation;
    if (sorted_ids) sorted_ids->push_back(bids[i].user);
  }
  return sum;
}

/// Minimum number of channels such that BS b gets n_b distinct channels and
/// adjacent BSs share none (multicolouring of the BS graph), memoised.
class MulticolorSolver {
 public:
  explicit MulticolorSolver(const Topology& topo) : bs_(topo.count())
  {
    for (std::uint32_t s = 1; s < (1u << bs_); ++s) {
      bool independent = true;
      for (int b = 0; b < bs_ && independent; ++b)
        if ((s >> b & 1u) && (topo.neighbours(b) & s)) independent = false;
      if (independent) sets_.push_back(s);
    }
  }

  int min_colors(const std::vector<int>& need) { return solve(need).colors; }

  /// One independent set per colour; BS b appears in exactly need[b] of them.
  std::vector<std::uint32_t> coloring(std::vector<int> need)
  {
    std::vector<std::uint32_t> out;
    while (true) {
      const auto e = solve(need);
      if (e.colors == 0) break;
      out.push_back(e.first);
      for (int b = 0; b < bs_; ++b)
        if (e.first >> b & 1u) --need[b];
    }
    return out;
  }

 private:
  struct Entry {
    int colors = 0;
    std::uint32_t first = 0;
  };

  Entry solve(const std::vector<int>& need)
  {
    std::uint32_t support = 0;
    for (int b = 0; b < bs_; ++b)
      if (need[b] > 0) support |= 1u << b;
    if (!support) return {};
    if (auto it = memo_.find(need); it != memo_.end()) return it->second;
    Entry best{std::numeric_limits<int>::max(), 0};
    for (std::uint32_t s : sets_) {
      if ((s & support) != s) continue;
      // Only sets maximal inside the support; smaller ones are dominated.
      bool maximal = true;
      for (std::uint32_t t : sets_)
        if ((t & support) == t && t != s && (t & s) == s) {
          maximal = false;
          break;
        }
      if (!maximal) continue;
      auto rest = need;
      for (int b = 0; b < bs_; ++b)
        if (s >> b & 1u) --rest[b];
      const int c = 1 + solve(rest).colors;
      if (c < best.colors) best = {c, s};
    }
    memo_.emplace(need, best);
    return best;
  }

  int bs_;
  std::vector<std::uint32_t> sets_;
  std::map<std::vector<int>, Entry> memo_;
};

}  // namespace detail

/// Exact VCG channel auction for one topology and channel count.
///
/// Within a group of bidders competing for the same kind of slot (server
/// transmitters at one BS, or UAV transmitters) any optimal winner set takes
/// the highest valuations, so the search runs over winner counts per group:
/// counts (n_1..n_B) need a multicolouring of the BS graph, and every UAV
/// winner needs a dedicated channel. Among optimal sets the lexicographically
/// smallest ascending id list wins.
class Auctioneer {
 public:
  Auctioneer(Topology topo, int channels)
      : topo_(std::move(topo)), channels_(channels), colors_(topo_)
  {
    if (channels < 0) throw ConfigError("channel count must be >= 0");
  }

  const Topology& topology() const { return topo_; }
  int channels() const { return channels_; }

  /// Winner determination (payments left at zero).
  AllocationResult determine_winners(std::span<const Bid> bids)
  {
    detail::validate_bids(bids, topo_);
    return solve(bids, -1);
  }

  /// VCG payments for the winners of `alloc`.
  std::vector<double> compute_payments(std::span<const Bid> bids, const AllocationResult& alloc)
  {
    std::vector<double> pay(bids.size(), 0.0);
    for (std::size_t k = 0; k < bids.size(); ++k) {
      if (!alloc.winners[k]) continue;
      std::vector<int> others;
      for (std::size_t i = 0; i < bids.size(); ++i)
        if (i != k && alloc.winners[i]) others.push_back(static_cast<int>(i));
      const double without_k = solve(bids, static_cast<int>(k)).welfare;
      pay[k] = without_k - detail::canonical_welfare(bids, others);
    }
    return pay;
  }

  /// Winners, channels and payments.
  AllocationResult run(std::span<const Bid> bids)
  {
    auto alloc = determine_winners(bids);
    alloc.payments = compute_payments(bids, alloc);
    return alloc;
  }

 private:
  AllocationResult solve(std::span<const Bid> bids, int excluded)
  {
    const int nbs = topo_.count();
    auto by_value = [&](int a, int b) {
      if (bids[a].valuation != bids[b].valuation) return bids[a].valuation > bids[b].valuation;
      return bids[a].user < bids[b].user;
    };
    std::vector<std::vector<int>> server(nbs);
    std::vector<int> uav;
    for (int i = 0; i < static_cast<int>(bids.size()); ++i) {
      if (i == excluded) continue;
      if (bids[i].demand == Demand::server) server[bids[i].bs].push_back(i);
      if (bids[i].demand == Demand::uav) uav.push_back(i);
    }
    for (auto& g : server) std::sort(g.begin(), g.end(), by_value);
    std::sort(uav.begin(), uav.end(), by_value);

    double best = -1.0;
    std::vector<int> best_ids;
    std::vector<int> best_counts;
    int best_uav = 0;
    std::vector<int> counts(nbs, 0);
    std::vector<int> ids;

    auto consider = [&](int used) {
      const int uav_max = std::min<int>(static_cast<int>(uav.size()), channels_ - used);
      for (int u = 0; u <= uav_max; ++u) {
        std::vector<int> members(uav.begin(), uav.begin() + u);
        for (int b = 0; b < nbs; ++b)
          members.insert(members.end(), server[b].begin(), server[b].begin() + counts[b]);
        const double w = detail::canonical_welfare(bids, members, &ids);
        if (w > best || (w == best && ids < best_ids)) {
          best = w;
          best_ids = ids;
          best_counts = counts;
          best_uav = u;
        }
      }
    };

    // Enumerate per-BS winner counts.
    auto recurse = [&](auto&& self, int b) -> void {
      if (b == nbs) {
        const int used = colors_.min_colors(counts);
        if (used <= channels_) consider(used);
        return;
      }
      const int cap = std::min<int>(static_cast<int>(server[b].size()), channels_);
      for (int n = 0; n <= cap; ++n) {
        counts[b] = n;
        self(self, b + 1);
      }
      counts[b] = 0;
    };
    recurse(recurse, 0);

    AllocationResult out;
    out.winners.assign(bids.size(), false);
    out.channel.assign(bids.size(), kNoChannel);
    out.payments.assign(bids.size(), 0.0);
    out.welfare = best;
    const auto sets = colors_.coloring(best_counts);
    std::vector<int> next(nbs, 0);
    for (int c = 0; c < static_cast<int>(sets.size()); ++c)
      for (int b = 0; b < nbs; ++b)
        if (sets[c] >> b & 1u) {
          const int i = server[b][next[b]++];
          out.winners[i] = true;
          out.channel[i] = c;
        }
    for (int u = 0; u < best_uav; ++u) {
      out.winners[uav[u]] = true;
      out.channel[uav[u]] = static_cast<int>(sets.size()) + u;
    }
    return out;
  }

  Topology topo_;
  int channels_;
  detail::MulticolorSolver colors_;
};

/// Brute-force reference for winner determination and payments: every winner
/// subset, every channel assignment (backtracking), same tie-break. Refuses
/// instances beyond 8 bidders or 4 channels.
inline AllocationResult oracle_enumerate(std::span<const Bid> bids, int channels,
                                         const Topology& topo)
{
  if (bids.size() > 8 || channels > 4) throw ConfigError("oracle_enumerate: instance too large");
  detail::validate_bids(bids, topo);
  const int n = static_cast<int>(bids.size());

  // Backtracking over channel choices for the members of `mask`.
  auto assign = [&](std::uint32_t mask, std::vector<int>& channel) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1u) members.push_back(i);
    channel.assign(n, kNoChannel);
    auto fits = [&](int i, int c) {
      for (int j : members) {
        if (channel[j] != c) continue;
        const auto& a = bids[i];
        const auto& b = bids[j];
        if (a.demand != b.demand) return false;
        if (a.demand == Demand::uav) return false;
        if (a.bs == b.bs || topo.adjacent(a.bs, b.bs)) return false;
      }
      return true;
    };
    auto place = [&](auto&& self, std::size_t idx) -> bool {
      if (idx == members.size()) return true;
      const int i = members[idx];
      for (int c = 0; c < channels; ++c) {
        if (!fits(i, c)) continue;
        channel[i] = c;
        if (self(self, idx + 1)) return true;
        channel[i] = kNoChannel;
      }
      return false;
    };
    return place(place, 0);
  };

  auto best_of = [&](int excluded, std::vector<int>* channel_out) {
    double best = -1.0;
    std::vector<int> best_ids;
    std::uint32_t best_mask = 0;
    std::vector<int> channel, ids;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      bool ok = true;
      std::vector<int> members;
      for (int i = 0; i < n && ok; ++i) {
        if (!(mask >> i & 1u)) continue;
        if (i == excluded || bids[i].demand == Demand::none) ok = false;
        members.push_back(i);
      }
      if (!ok || !assign(mask, channel)) continue;
      const double w = detail::canonical_welfare(bids, members, &ids);
      if (w > best || (w == best && ids < best_ids)) {
        best = w;
        best_ids = ids;
        best_mask = mask;
      }
    }
    if (channel_out) assign(best_mask, *channel_out);
    return std::pair{best, best_mask};
  };

  AllocationResult out;
  std::vector<int> channel;
  const auto [welfare, mask] = best_of(-1, &channel);
  out.welfare = welfare;
  out.channel = channel;
  out.winners.assign(n, false);
  out.payments.assign(n, 0.0);
  for (int i = 0; i < n; ++i) out.winners[i] = mask >> i & 1u;
  for (int k = 0; k < n; ++k) {
    if (!out.winners[k]) continue;
    std::vector<int> others;
    for (int i = 0; i < n; ++i)
      if (i != k && out.winners[i]) others.push_back(i);
    out.payments[k] = best_of(k, nullptr).first - detail::canonical_welfare(bids, others);
  }
  return out;
}

}  // namespace agmec
