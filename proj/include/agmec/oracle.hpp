#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "agmec/compute.hpp"
#include "agmec/config.hpp"
#include "agmec/context.hpp"
#include "agmec/error.hpp"
#include "agmec/rng.hpp"
#include "agmec/world.hpp"

namespace agmec {

/// Explicit finite MDP. Pair (s, a) is stored at s·actions + a. `post` maps
/// each pair to its post-decision state; Q̃ is indexed by (post, a).
struct FiniteMdp {
  int states = 0;
  int actions = 0;
  int post_states = 0;
  std::vector<char> feasible;
  std::vector<double> reward;
  std::vector<int> post;
  std::vector<std::vector<std::pair<int, double>>> next;

  std::size_t pair(int s, int a) const { return static_cast<std::size_t>(s) * actions + a; }

  std::span<const char> mask(int s) const
  {
    return {feasible.data() + pair(s, 0), static_cast<std::size_t>(actions)};
  }

  void check() const
  {
    const auto n = static_cast<std::size_t>(states) * actions;
    if (states < 1 || actions < 1 || feasible.size() != n || reward.size() != n || post.size() != n ||
        next.size() != n)
      throw ConfigError("malformed MDP");
    for (int s = 0; s < states; ++s) {
      bool any = false;
      for (int a = 0; a < actions; ++a) {
        if (!feasible[pair(s, a)]) continue;
        any = true;
        double total = 0.0;
        for (auto [t, p] : next[pair(s, a)]) {
          if (t < 0 || t >= states || p < 0) throw ConfigError("malformed MDP transition");
          total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("MDP transition row does not sum to 1");
        if (post[pair(s, a)] < 0 || post[pair(s, a)] >= post_states) throw ConfigError("bad post-decision id");
      }
      if (!any) throw ConfigError("MDP state without feasible action");
    }
  }
};

inline double masked_max(std::span<const double> q, std::span<const char> mask)
{
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i)
    if (mask[i]) best = std::max(best, q[i]);
  return best;
}

struct ValueResult {
  std::vector<double> v;
  std::vector<double> q;       // (s, a), -inf where infeasible
  std::vector<double> q_post;  // (post, a), 0 where never reached
  std::vector<double> diffs;   // sup-norm change per sweep
  int iterations = 0;
};

/// Value iteration on the normalised Bellman equation
///   Q(s,a) = (1−γ)·ℓ(s,a) + γ·Σ p(s'|s,a)·V(s'),  V = max_a Q,
/// until the sup-norm change drops below tol.
inline ValueResult value_iteration(const FiniteMdp& m, double discount, double tol = 1e-9,
                                   int max_iterations = 1000000)
{
  m.check();
  if (!(discount >= 0 && discount < 1)) throw ConfigError("discount must be in [0, 1)");
  ValueResult r;
  r.v.assign(m.states, 0.0);
  r.q.assign(static_cast<std::size_t>(m.states) * m.actions, -std::numeric_limits<double>::infinity());
  auto backup = [&](const std::vector<double>& v, std::size_t i) {
    double e = 0.0;
    for (auto [t, p] : m.next[i]) e += p * v[t];
    return e;
  };
  while (true) {
    std::vector<double> v(m.states);
    double diff = 0.0;
    for (int s = 0; s < m.states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.actions; ++a) {
        const auto i = m.pair(s, a);
        if (!m.feasible[i]) continue;
        r.q[i] = (1.0 - discount) * m.reward[i] + discount * backup(r.v, i);
        best = std::max(best, r.q[i]);
      }
      v[s] = best;
      diff = std::max(diff, std::abs(v[s] - r.v[s]));
    }
    r.v.swap(v);
    r.diffs.push_back(diff);
    ++r.iterations;
    if (diff < tol) break;
    if (r.iterations >= max_iterations) throw ConfigError("value iteration did not converge");
  }
  // Final Q and Q̃ from the converged V.
  r.q_post.assign(static_cast<std::size_t>(m.post_states) * m.actions, 0.0);
  for (int s = 0; s < m.states; ++s)
    for (int a = 0; a < m.actions; ++a) {
      const auto i = m.pair(s, a);
      if (!m.feasible[i]) continue;
      const double cont = discount * backup(r.v, i);
      r.q[i] = (1.0 - discount) * m.reward[i] + cont;
      r.q_post[static_cast<std::size_t>(m.post[i]) * m.actions + a] = cont;
    }
  return r;
}

/// Q and post-decision Q tables with visit counters.
class TabularQ {
 public:
  TabularQ(int states, int actions, int post_states)
      : actions_(actions),
        q_(static_cast<std::size_t>(states) * actions, 0.0),
        q_post_(static_cast<std::size_t>(post_states) * actions, 0.0),
        visits_(static_cast<std::size_t>(states) * actions, 0)
  {
  }

  int actions() const { return actions_; }
  double q(int s, int a) const { return q_[idx(s, a)]; }
  double q_post(int p, int a) const { return q_post_[idx(p, a)]; }
  long visits(int s, int a) const { return visits_[idx(s, a)]; }
  std::span<const double> row(int s) const { return {q_.data() + idx(s, 0), static_cast<std::size_t>(actions_)}; }

  /// Both updates with step size α = 1/(1 + visits(s,a)):
  ///   Q(s,a)  ← Q + α·((1−γ)·ℓ + γ·max Q(s',·) − Q)
  ///   Q̃(p,a) ← Q̃ + α·(γ·max Q(s',·) − Q̃)
  void update(int s, int a, int post, double payoff, int next, std::span<const char> next_mask, double discount)
  {
    const double alpha = 1.0 / (1.0 + static_cast<double>(visits_[idx(s, a)]));
    update(s, a, post, payoff, next, next_mask, discount, alpha);
    ++visits_[idx(s, a)];
  }

  /// Same with an explicit step size; visit counters are left alone.
  void update(int s, int a, int post, double payoff, int next, std::span<const char> next_mask, double discount,
              double alpha)
  {
    const double m = masked_max(row(next), next_mask);
    const double cont = discount * (std::isfinite(m) ? m : 0.0);
    auto& q = q_[idx(s, a)];
    auto& qp = q_post_[idx(post, a)];
    q += alpha * ((1.0 - discount) * payoff + cont - q);
    qp += alpha * (cont - qp);
  }

 private:
  std::size_t idx(int s, int a) const { return static_cast<std::size_t>(s) * actions_ + a; }

  int actions_;
  std::vector<double> q_, q_post_;
  std::vector<long> visits_;
};

/// max over pairs of |Q(s,a) − ((1−γ)·ℓ(s,a) + Q̃(post(s,a), a))|. With
/// `visited_only`, pairs never updated are skipped.
inline double consistency_check(const TabularQ& t, const FiniteMdp& m, double discount, bool visited_only = true)
{
  double worst = 0.0;
  for (int s = 0; s < m.states; ++s)
    for (int a = 0; a < m.actions; ++a) {
      const auto i = m.pair(s, a);
      if (!m.feasible[i] || (visited_only && t.visits(s, a) == 0)) continue;
      worst = std::max(worst, std::abs(t.q(s, a) - ((1.0 - discount) * m.reward[i] + t.q_post(m.post[i], a))));
    }
  return worst;
}

inline double consistency_check(const ValueResult& r, const FiniteMdp& m, double discount)
{
  double worst = 0.0;
  for (int s = 0; s < m.states; ++s)
    for (int a = 0; a < m.actions; ++a) {
      const auto i = m.pair(s, a);
      if (!m.feasible[i]) continue;
      const double qp = r.q_post[static_cast<std::size_t>(m.post[i]) * m.actions + a];
      worst = std::max(worst, std::abs(r.q[i] - ((1.0 - discount) * m.reward[i] + qp)));
    }
  return worst;
}

inline int sample_next(const std::vector<std::pair<int, double>>& row, double u)
{
  double acc = 0.0;
  for (auto [t, p] : row) {
    acc += p;
    if (u < acc) return t;
  }
  return row.back().first;
}

/// Tabular learning along one trajectory under a uniform behaviour policy.
inline TabularQ learn_tabular(const FiniteMdp& m, int start, long steps, double discount, Rng& rng)
{
  TabularQ t(m.states, m.actions, m.post_states);
  std::vector<int> allowed;
  int s = start;
  for (long i = 0; i < steps; ++i) {
    allowed.clear();
    for (int a = 0; a < m.actions; ++a)
      if (m.feasible[m.pair(s, a)]) allowed.push_back(a);
    const int a = allowed[uniform_index(rng, allowed.size())];
    const auto p = m.pair(s, a);
    const int s2 = sample_next(m.next[p], uniform01(rng));
    t.update(s, a, m.post[p], m.reward[p], s2, m.mask(s2), discount);
    s = s2;
  }
  return t;
}

struct PolicyMatch {
  int compared = 0;
  int matched = 0;
  double fraction() const { return compared ? static_cast<double>(matched) / compared : 0.0; }
};

/// Share of visited states whose tabular greedy action lies in the exact
/// arg-max set (within `tie`).
inline PolicyMatch policy_match(const TabularQ& t, const ValueResult& exact, const FiniteMdp& m, double tie = 1e-9)
{
  PolicyMatch r;
  for (int s = 0; s < m.states; ++s) {
    bool visited = false;
    for (int a = 0; a < m.actions; ++a) visited = visited || t.visits(s, a) > 0;
    if (!visited) continue;
    int greedy = -1;
    for (int a = 0; a < m.actions; ++a)
      if (m.feasible[m.pair(s, a)] && (greedy < 0 || t.q(s, a) > t.q(s, greedy))) greedy = a;
    ++r.compared;
    if (exact.q[m.pair(s, greedy)] >= exact.v[s] - tie) ++r.matched;
  }
  return r;
}

/// Random MDP with `branching` successors per pair and U(0,1) payoffs.
inline FiniteMdp random_mdp(int states, int actions, int branching, Rng& rng)
{
  FiniteMdp m;
  m.states = states;
  m.actions = actions;
  m.post_states = states * actions;
  const auto n = static_cast<std::size_t>(states) * actions;
  m.feasible.assign(n, 1);
  m.reward.resize(n);
  m.post.resize(n);
  m.next.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.reward[i] = uniform01(rng);
    m.post[i] = static_cast<int>(i);
    std::vector<double> w(branching);
    double total = 0.0;
    for (auto& x : w) total += (x = 0.05 + uniform01(rng));
    for (int b = 0; b < branching; ++b)
      m.next[i].push_back({static_cast<int>(uniform_index(rng, states)), w[b] / total});
  }
  return m;
}

// ---------------------------------------------------------------------------
// Single-MU instance built from the simulator's own per-epoch functions.

struct TinyInstance {
  WorldConfig world;
  int delta = 0;
  FiniteMdp mdp;
  int start = 0;
};

/// World parameters of the tiny instance: one MU and one BS on a 2x2 grid,
/// a UAV that never moves, one channel, λ = 1, D_max = 2, Δ = 2.
inline WorldConfig tiny_world()
{
  WorldConfig w;
  w.grid_cols = 2;
  w.grid_rows = 2;
  w.cell_size = 50.0;
  w.bs_count = 1;
  w.num_users = 1;
  w.channels = 1;
  w.arrival_prob = 1.0;
  w.packets_per_task = 2;
  w.cycles_per_bit = 1500.0;
  w.aoi_max = 3.0;
  w.discount = 0.5;
  w.seed = 7;
  return w;
}

namespace detail {

// Pipeline ages instead of absolute arrival epochs keep the chain finite.
struct TinyKey {
  int cell = 0;
  int association = 0;
  int cpu_remaining = 0;
  int cpu_age = 0;
  int backlog = 0;
  int upload_age = 0;
  double uav_bits = 0.0;
  int uav_age = 0;
  double aoi = 0.0;

  auto tie() const
  {
    return std::tie(cell, association, cpu_remaining, cpu_age, backlog, upload_age, uav_bits, uav_age, aoi);
  }
  bool operator<(const TinyKey& o) const { return tie() < o.tie(); }
};

}  // namespace detail

/// Enumerates every reachable state of the tiny instance by breadth-first
/// search, using make_context / schedule_and_transmit / uav_processing_step /
/// aoi_step for the transitions. With one bidder φ = z and τ = 0.
inline TinyInstance build_tiny_instance(const WorldConfig& w = tiny_world())
{
  if (w.num_users != 1 || w.bs_count != 1 || w.arrival_prob != 1.0)
    throw ConfigError("tiny instance needs one MU, one BS and arrival_prob = 1");
  TinyInstance inst;
  inst.world = w;
  inst.delta = local_epochs_required(w);
  const int delta = inst.delta;
  World world(w);
  world.set_uav_model(MobilityModel::stationary(world.grid()));
  const int bs = 0;
  const int cap = static_cast<int>(std::ceil(w.aoi_max / w.epoch_duration)) + delta + 1;
  const int actions = action_count(w.packets_per_task);
  const std::int64_t base = 1000;

  using detail::TinyKey;
  std::map<TinyKey, int> ids, post_ids;
  std::vector<TinyKey> keys;
  auto id_of = [&](const TinyKey& k) {
    auto [it, fresh] = ids.emplace(k, static_cast<int>(keys.size()));
    if (fresh) keys.push_back(k);
    return it->second;
  };
  auto post_of = [&](TinyKey k) {
    return post_ids.emplace(k, static_cast<int>(post_ids.size())).first->second;
  };

  // The task arriving in the current epoch is always in the buffer (λ = 1).
  auto to_user = [&](const TinyKey& k) {
    UserState u;
    u.buffer.arrival = base;
    u.association = k.association;
    u.aoi = k.aoi;
    u.proc.cpu_remaining = k.cpu_remaining;
    u.proc.cpu_arrival = k.cpu_remaining ? base - k.cpu_age : 0;
    u.proc.backlog = k.backlog;
    u.proc.upload_arrival = k.backlog ? base - k.upload_age : 0;
    u.proc.uav_bits = k.uav_bits;
    u.proc.uav_arrival = k.uav_bits > 0 ? base - k.uav_age : 0;
    return u;
  };
  auto age = [&](std::int64_t arrival, std::int64_t now) {
    return static_cast<int>(std::min<std::int64_t>(now - arrival, cap));
  };

  const Location start_cell = world.user(0);
  inst.start = id_of(TinyKey{start_cell.cell, bs, 0, 0, 0, 0, 0.0, 0, 0.0});
  auto& m = inst.mdp;
  m.actions = actions;
  for (std::size_t s = 0; s < keys.size(); ++s) {
    const TinyKey k = keys[s];
    const UserState u0 = to_user(k);
    world.place_user(0, Location{k.cell});
    const auto ctx = make_context(w, delta, u0, 1, bs, world.gain_to_bs(0, bs), world.gain_to_uav(0));
    const auto& row = world.user_model(0).row(Location{k.cell});
    for (int a = 0; a < actions; ++a) {
      const Action act = action_from_index(a, w.packets_per_task);
      const bool ok = ctx.allowed(act);
      m.feasible.push_back(ok ? 1 : 0);
      m.reward.push_back(0.0);
      m.post.push_back(-1);
      m.next.emplace_back();
      if (!ok) continue;
      const auto i = m.feasible.size() - 1;

      TinyKey pk = k;
      const int after = (act.x == Offload::server || act.x == Offload::uav) ? w.packets_per_task : k.backlog;
      pk.backlog = after - act.z * act.r;
      m.post[i] = post_of(pk);

      UserState u = u0;
      const auto tx = schedule_and_transmit(u, ctx, act, delta);
      std::vector<ProcessorState> procs{u.proc};
      const auto uav = uav_processing_step(procs, w.vm_rate, w.vm_interference, w.epoch_duration);
      u.proc = procs[0];
      load_uav_job(u, tx, w);
      m.reward[i] = payoff(u0.aoi, tx.energy, 0.0, w.aoi_weight, w.energy_weight).payoff;
      const double aoi = aoi_step(u0.aoi, completions_of(tx, uav, 0), base, w, delta);

      TinyKey nk;
      nk.association = u.association;
      nk.cpu_remaining = u.proc.cpu_remaining;
      nk.cpu_age = u.proc.cpu_remaining ? age(u.proc.cpu_arrival, base + 1) : 0;
      nk.backlog = u.proc.backlog;
      nk.upload_age = u.proc.backlog ? age(u.proc.upload_arrival, base + 1) : 0;
      nk.uav_bits = u.proc.uav_bits;
      nk.uav_age = u.proc.uav_bits > 0 ? age(u.proc.uav_arrival, base + 1) : 0;
      nk.aoi = aoi;
      for (const auto& e : row) {
        if (e.prob <= 0) continue;
        nk.cell = e.to.cell;
        m.next[i].push_back({id_of(nk), e.prob});
      }
    }
  }
  m.states = static_cast<int>(keys.size());
  m.post_states = static_cast<int>(post_ids.size());
  m.check();
  return inst;
}

struct OracleReport {
  int tiny_states = 0;
  int tiny_pairs = 0;
  double exact_residual = 0.0;
  double learned_residual = 0.0;
  PolicyMatch tiny_policy;
  PolicyMatch random_policy;
  bool contraction = true;
};

/// The tiny-instance and random-MDP cross-checks of tabular learning against
/// value iteration.
inline OracleReport run_oracle_suite(long steps = 200000, std::uint64_t seed = 11)
{
  OracleReport r;
  const auto inst = build_tiny_instance();
  const double g = inst.world.discount;
  const auto& m = inst.mdp;
  r.tiny_states = m.states;
  for (char f : m.feasible) r.tiny_pairs += f;
  const auto exact = value_iteration(m, g);
  r.exact_residual = consistency_check(exact, m, g);
  for (std::size_t i = 1; i < exact.diffs.size(); ++i)
    if (exact.diffs[i] > g * exact.diffs[i - 1] + 1e-15) r.contraction = false;
  Rng rng = make_stream(seed, 1);
  const auto learned = learn_tabular(m, inst.start, steps, g, rng);
  r.learned_residual = consistency_check(learned, m, g);
  r.tiny_policy = policy_match(learned, exact, m);

  Rng gen = make_stream(seed, 2);
  const auto rm = random_mdp(20, 4, 3, gen);
  const auto rexact = value_iteration(rm, g);
  Rng walk = make_stream(seed, 3);
  const auto rlearned = learn_tabular(rm, 0, steps, g, walk);
  r.random_policy = policy_match(rlearned, rexact, rm);
  return r;
}

}  // namespace agmec
