#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "agmec/auction.hpp"
#include "agmec/config.hpp"
#include "agmec/context.hpp"
#include "agmec/nn.hpp"
#include "agmec/rng.hpp"

namespace agmec {

/// Static scales used by encode_state.
struct Encoding {
  int grid_cols = 1;
  int grid_rows = 1;
  int bs_count = 1;
  int delta = 1;
  int packets_per_task = 1;
  double task_bits = 1.0;
  double aoi_max = 1.0;
  double vm_rate = 1.0;

  static Encoding from(const WorldConfig& w, int delta)
  {
    return Encoding{w.grid_cols, w.grid_rows, w.bs_count, delta, w.packets_per_task,
                    w.packets_per_task * w.bits_per_packet, w.aoi_max, w.vm_rate};
  }

  int width() const { return bs_count + 12; }
};

/// Feature vector of a (pre- or post-decision) local state. `payment_scale`
/// is the agent's running maximum payment.
inline std::vector<double> encode_state(const LocalState& s, const Encoding& e, double payment_scale)
{
  std::vector<double> f;
  f.reserve(e.width());
  auto coord = [&](int cell) {
    const double cx = e.grid_cols > 1 ? static_cast<double>(cell % e.grid_cols) / (e.grid_cols - 1) : 0.0;
    const double cy = e.grid_rows > 1 ? static_cast<double>(cell / e.grid_cols) / (e.grid_rows - 1) : 0.0;
    f.push_back(cx);
    f.push_back(cy);
  };
  coord(s.uav_cell);
  coord(s.mu_cell);
  f.push_back(s.has_task ? 1.0 : 0.0);
  for (int i = 0; i <= e.bs_count; ++i) f.push_back(s.association == i ? 1.0 : 0.0);
  f.push_back(static_cast<double>(s.cpu_remaining) / e.delta);
  f.push_back(s.uav_bits / e.task_bits);
  f.push_back(static_cast<double>(s.backlog) / e.packets_per_task);
  f.push_back(s.aoi / e.aoi_max);
  f.push_back(payment_scale > 0 ? s.last_payment / payment_scale : 0.0);
  f.push_back(s.last_rate / e.vm_rate);
  return f;
}

/// S̃: the state right after transmitting, D̃ = D_after_scheduling − φ·R.
inline LocalState post_decision(const LocalState& s, const Action& a, int phi, int packets_per_task)
{
  const int after = (a.x == Offload::server || a.x == Offload::uav) ? packets_per_task : s.backlog;
  const int sent = phi * a.r;
  if (sent < 0 || sent > after) throw ConfigError("post_decision: more packets sent than queued");
  LocalState t = s;
  t.backlog = after - sent;
  return t;
}

/// Masked arg-max, lowest index on ties; -1 if nothing is allowed.
inline int masked_argmax(std::span<const double> q, std::span<const char> mask)
{
  int best = -1;
  for (int i = 0; i < static_cast<int>(q.size()); ++i)
    if (mask[i] && (best < 0 || q[i] > q[best])) best = i;
  return best;
}

/// ε-greedy over the allowed entries of `q`.
inline int select_action(std::span<const double> q, std::span<const char> mask, double epsilon, Rng& rng)
{
  std::vector<int> allowed;
  for (int i = 0; i < static_cast<int>(mask.size()); ++i)
    if (mask[i]) allowed.push_back(i);
  if (allowed.empty()) throw ConfigError("select_action: no feasible action");
  if (uniform01(rng) < epsilon) return allowed[uniform_index(rng, allowed.size())];
  return masked_argmax(q, mask);
}

/// Channel request for action `a`, or nothing when z = 0 or no upload is
/// pending. ν is the utility of winning plus Q̃/(1−γ), floored at zero.
inline std::optional<Bid> construct_bid(const Action& a, const ActionContext& ctx, double post_q,
                                        double discount, int user, int serving_bs)
{
  if (a.z != 1) return std::nullopt;
  const auto dest = ctx.dest[static_cast<int>(a.x)];
  if (dest == Destination::none) return std::nullopt;
  Bid b;
  b.user = user;
  b.bs = serving_bs;
  b.demand = dest == Destination::uav ? Demand::uav : Demand::server;
  b.valuation = std::max(0.0, ctx.utility(a.x, a.r) + post_q / (1.0 - discount));
  return b;
}

struct Experience {
  LocalState state;
  int action = 0;  // realised (φ, X, R)
  double payoff = 0.0;
  LocalState next;
  std::vector<char> next_mask;
};

/// FIFO replay memory of fixed capacity.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity)
  {
    if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  void store(Experience e)
  {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(e));
    } else {
      items_[head_] = std::move(e);
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// i-th oldest item.
  const Experience& at(std::size_t i) const { return items_.at((head_ + i) % items_.size()); }

  /// n distinct indices, uniform (partial Fisher–Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const
  {
    if (n > items_.size()) throw ConfigError("sample larger than replay memory");
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    idx.resize(n);
    return idx;
  }

  const Experience& raw(std::size_t i) const { return items_.at(i); }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Experience> items_;
};

struct TrainLoss {
  double q = std::numeric_limits<double>::quiet_NaN();     // DQN-I
  double post = std::numeric_limits<double>::quiet_NaN();  // DQN-II
  bool trained() const { return !std::isnan(q); }
};

inline std::vector<int> network_sizes(int inputs, int outputs, const LearnConfig& l)
{
  std::vector<int> s{inputs};
  for (int i = 0; i < l.hidden_layers; ++i) s.push_back(l.hidden_units);
  s.push_back(outputs);
  return s;
}

/// One MU's learner: DQN-I (θ, target θ⁻), DQN-II (θ̃), replay memory.
class DeepAgent {
 public:
  DeepAgent(const WorldConfig& w, const LearnConfig& l, int delta, Rng rng)
      : enc_(Encoding::from(w, delta)),
        learn_(l),
        discount_(w.discount),
        actions_(action_count(w.packets_per_task)),
        memory_(l.replay_capacity),
        rng_(std::move(rng))
  {
    const auto sizes = network_sizes(enc_.width(), actions_, l);
    q_ = Mlp::he_init(sizes, rng_);
    post_ = Mlp::he_init(sizes, rng_);
    target_ = q_;
    q_opt_ = Adam(q_.params().size(), l.learning_rate, l.adam_beta1, l.adam_beta2, l.adam_epsilon);
    post_opt_ = Adam(post_.params().size(), l.learning_rate, l.adam_beta1, l.adam_beta2, l.adam_epsilon);
  }

  const Encoding& encoding() const { return enc_; }
  Mlp& q_net() { return q_; }
  Mlp& target_net() { return target_; }
  Mlp& post_net() { return post_; }
  const ReplayMemory& memory() const { return memory_; }
  double payment_scale() const { return payment_scale_; }
  void observe_payment(double tau) { payment_scale_ = std::max(payment_scale_, tau); }

  std::vector<double> encode(const LocalState& s) const { return encode_state(s, enc_, payment_scale_); }

  int act(const LocalState& s, std::span<const char> mask, double epsilon)
  {
    const auto q = q_.forward(encode(s));
    return select_action(q, mask, epsilon, rng_);
  }

  /// Q̃(S̃, a) with S̃ assuming the channel is won.
  double post_value(const LocalState& s, const Action& a) const
  {
    const auto t = post_decision(s, a, a.z, enc_.packets_per_task);
    return post_.forward(encode(t))[action_index(a, enc_.packets_per_task)];
  }

  void store(Experience e) { memory_.store(std::move(e)); }

  /// One Adam step on each network from a uniformly drawn mini-batch.
  TrainLoss train()
  {
    const auto n = static_cast<std::size_t>(learn_.batch_size);
    if (memory_.size() < n) return {};
    const auto idx = memory_.sample_indices(n, rng_);
    return train_on(idx);
  }

  /// Training step on explicit memory slots; both targets use the networks
  /// as they are before this step.
  TrainLoss train_on(std::span<const std::size_t> idx)
  {
    const double g = discount_;
    const double inv = 1.0 / static_cast<double>(idx.size());
    std::vector<double> grad_q(q_.params().size(), 0.0), grad_p(post_.params().size(), 0.0);
    std::vector<double> out_grad(actions_, 0.0);
    Mlp::Cache cache;
    TrainLoss loss{0.0, 0.0};
    for (auto i : idx) {
      const auto& e = memory_.raw(i);
      const auto next = encode(e.next);
      const auto q_next = q_.forward(next);
      const int best = masked_argmax(q_next, e.next_mask);
      const double max_next = best >= 0 ? q_next[best] : 0.0;
      const double boot = best >= 0 ? target_.forward(next)[best] : 0.0;
      const double y1 = (1.0 - g) * e.payoff + g * boot;
      const double y2 = g * max_next;

      const auto out = q_.forward(encode(e.state), cache);
      const double d1 = out[e.action] - y1;
      loss.q += d1 * d1 * inv;
      std::fill(out_grad.begin(), out_grad.end(), 0.0);
      out_grad[e.action] = 2.0 * d1 * inv;
      q_.backward(cache, out_grad, grad_q);

      const Action a = action_from_index(e.action, enc_.packets_per_task);
      const auto s_post = post_decision(e.state, a, a.z, enc_.packets_per_task);
      const auto out2 = post_.forward(encode(s_post), cache);
      const double d2 = out2[e.action] - y2;
      loss.post += d2 * d2 * inv;
      std::fill(out_grad.begin(), out_grad.end(), 0.0);
      out_grad[e.action] = 2.0 * d2 * inv;
      post_.backward(cache, out_grad, grad_p);
    }
    q_opt_.step(q_.params(), grad_q);
    post_opt_.step(post_.params(), grad_p);
    return loss;
  }

  /// θ⁻ := θ when epoch is a multiple of the period.
  bool sync_target(long epoch)
  {
    if (epoch % learn_.target_sync_period != 0) return false;
    target_ = q_;
    return true;
  }

 private:
  Encoding enc_;
  LearnConfig learn_;
  double discount_;
  int actions_;
  ReplayMemory memory_;
  Rng rng_;
  Mlp q_, target_, post_;
  Adam q_opt_, post_opt_;
  double payment_scale_ = 0.0;
};

/// Linear decay from start to end over the first `fraction` of the run.
inline double epsilon_at(long epoch, long total, const LearnConfig& l)
{
  const double horizon = l.epsilon_decay_fraction * static_cast<double>(total);
  if (horizon <= 0) return l.epsilon_end;
  const double t = std::min(1.0, static_cast<double>(epoch - 1) / horizon);
  return l.epsilon_start + (l.epsilon_end - l.epsilon_start) * t;
}

}  // namespace agmec
