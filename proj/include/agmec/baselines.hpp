#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "agmec/auction.hpp"
#include "agmec/context.hpp"
#include "agmec/error.hpp"

namespace agmec {

enum class Scheme { deeprl, local, server, uav, greedy };

inline Scheme parse_scheme(std::string_view s)
{
  if (s == "deeprl") return Scheme::deeprl;
  if (s == "local") return Scheme::local;
  if (s == "server") return Scheme::server;
  if (s == "uav") return Scheme::uav;
  if (s == "greedy") return Scheme::greedy;
  throw ConfigError("unknown scheme '" + std::string(s) + "'");
}

inline const char* scheme_name(Scheme s)
{
  switch (s) {
    case Scheme::deeprl: return "deeprl";
    case Scheme::local: return "local";
    case Scheme::server: return "server";
    case Scheme::uav: return "uav";
    case Scheme::greedy: return "greedy";
  }
  return "?";
}

/// Fixed policy of a baseline scheme.
inline Action baseline_action(Scheme scheme, const ActionContext& c)
{
  auto with_upload = [&](Offload x) {
    const int r = c.limit(x);
    return Action{r >= 1 ? 1 : 0, x, r};
  };
  switch (scheme) {
    case Scheme::local:
      return Action{0, c.feasible[1] ? Offload::local : Offload::none, 0};
    case Scheme::server:
      return with_upload(c.feasible[2] ? Offload::server : Offload::none);
    case Scheme::uav:
      return with_upload(c.feasible[3] ? Offload::uav : Offload::none);
    case Scheme::greedy: {
      if (!c.feasible[1] && !c.feasible[2] && !c.feasible[3]) return with_upload(Offload::none);
      const auto better = c.gain_uav > c.gain_bs ? Offload::uav : Offload::server;
      if (c.feasible[static_cast<int>(better)]) return with_upload(better);
      if (c.feasible[1]) return with_upload(Offload::local);
      return with_upload(Offload::none);
    }
    case Scheme::deeprl:
      break;
  }
  throw ConfigError("baseline_action: not a baseline scheme");
}

/// ν = u with the channel won and R_max' packets sent; no bid when nothing
/// can be sent.
inline std::optional<Bid> baseline_bid(const Action& a, const ActionContext& c, int user, int serving_bs)
{
  const auto dest = c.dest[static_cast<int>(a.x)];
  if (a.z != 1 || a.r < 1 || dest == Destination::none) return std::nullopt;
  return Bid{user, serving_bs, std::max(0.0, c.utility(a.x, a.r)),
             dest == Destination::uav ? Demand::uav : Demand::server};
}

}  // namespace agmec
