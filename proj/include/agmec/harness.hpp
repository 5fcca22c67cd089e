#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "agmec/agent.hpp"
#include "agmec/auction.hpp"
#include "agmec/baselines.hpp"
#include "agmec/compute.hpp"
#include "agmec/config.hpp"
#include "agmec/context.hpp"
#include "agmec/world.hpp"

namespace agmec {

/// Per-epoch metrics. Per-MU vectors are indexed by MU; AoI is the value at
/// the start of the epoch (the one entering the utility).
struct EpochRecord {
  long epoch = 0;
  std::vector<double> aoi, energy, utility, payoff, payment, loss_q, loss_post;
  std::vector<Action> action;  // realised (φ, X, R)
  int bids = 0;
  int winners = 0;
  double revenue = 0.0;
  double discounted_payoff = 0.0;  // mean over MUs of the running discounted payoff
};

inline double mean_of(const std::vector<double>& v)
{
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// One simulation run: world, per-MU state, policy (agents or a baseline).
class Simulation {
 public:
  static constexpr std::uint64_t kArrivalStream = 3000;
  static constexpr std::uint64_t kAgentStream = 5000;

  Simulation(const SimConfig& cfg, Scheme scheme)
      : cfg_(cfg),
        scheme_(scheme),
        world_(cfg.world),
        auctioneer_(world_.topology(), cfg.world.channels),
        delta_(local_epochs_required(cfg.world)),
        users_(cfg.world.num_users),
        running_(cfg.world.num_users, 0.0),
        pending_(cfg.world.num_users)
  {
    validate(cfg);
    for (int k = 0; k < cfg.world.num_users; ++k) {
      users_[k].association = world_.serving_bs(k);
      arrival_rngs_.push_back(make_stream(cfg.world.seed, kArrivalStream + k));
      if (scheme == Scheme::deeprl)
        agents_.emplace_back(cfg.world, cfg.learn, delta_, make_stream(cfg.world.seed, kAgentStream + k));
    }
  }

  const SimConfig& config() const { return cfg_; }
  Scheme scheme() const { return scheme_; }
  World& world() { return world_; }
  int delta() const { return delta_; }
  int num_users() const { return static_cast<int>(users_.size()); }
  UserState& user(int k) { return users_.at(k); }
  DeepAgent& agent(int k) { return agents_.at(k); }
  long epoch() const { return epoch_; }
  const std::vector<EpochRecord>& records() const { return records_; }

  /// Runs epoch j = epoch() + 1 and returns its record. Losses of the record
  /// are filled in when the next epoch (or finish()) trains on it.
  const EpochRecord& run_epoch()
  {
    const long j = ++epoch_;
    const int n = num_users();
    const auto& w = cfg_.world;
    begin_epoch(j);

    EpochRecord rec;
    rec.epoch = j;
    auto nan = std::numeric_limits<double>::quiet_NaN();
    rec.aoi.assign(n, 0.0);
    rec.energy.assign(n, 0.0);
    rec.utility.assign(n, 0.0);
    rec.payoff.assign(n, 0.0);
    rec.payment.assign(n, 0.0);
    rec.loss_q.assign(n, nan);
    rec.loss_post.assign(n, nan);

    // Actions and bids.
    std::vector<Action> chosen(n);
    std::vector<int> bid_of(n, -1);
    std::vector<Bid> bids;
    const double eps = epsilon_at(j, cfg_.run.epochs, cfg_.learn);
    for (int k = 0; k < n; ++k) {
      const auto& c = contexts_[k];
      std::optional<Bid> bid;
      if (scheme_ == Scheme::deeprl) {
        auto& ag = agents_[k];
        chosen[k] = action_from_index(ag.act(states_[k], masks_[k], eps), w.packets_per_task);
        if (chosen[k].z == 1)
          bid = construct_bid(chosen[k], c, ag.post_value(states_[k], chosen[k]), w.discount, k,
                              world_.serving_bs(k));
      } else {
        chosen[k] = baseline_action(scheme_, c);
        bid = baseline_bid(chosen[k], c, k, world_.serving_bs(k));
      }
      if (bid) {
        bid_of[k] = static_cast<int>(bids.size());
        bids.push_back(*bid);
      }
    }

    // Auction.
    const auto alloc = auctioneer_.run(bids);
    rec.bids = static_cast<int>(bids.size());
    rec.winners = alloc.winner_count();
    rec.revenue = alloc.revenue();

    // Scheduling, transmission, local CPU.
    std::vector<Action> realised(n);
    std::vector<TransmitOutcome> tx(n);
    for (int k = 0; k < n; ++k) {
      const int b = bid_of[k];
      const int phi = b >= 0 && alloc.winners[b] ? 1 : 0;
      realised[k] = Action{phi, chosen[k].x, phi * chosen[k].r};
      rec.action.push_back(realised[k]);
      rec.payment[k] = b >= 0 ? alloc.payments[b] : 0.0;
      tx[k] = schedule_and_transmit(users_[k], contexts_[k], realised[k], delta_);
    }

    // UAV VMs (global), then newly uploaded jobs.
    std::vector<ProcessorState> procs(n);
    for (int k = 0; k < n; ++k) procs[k] = users_[k].proc;
    const auto uav = uav_processing_step(procs, w.vm_rate, w.vm_interference, w.epoch_duration);
    for (int k = 0; k < n; ++k) {
      const bool had_vm = users_[k].proc.uav_bits > 0;
      users_[k].proc = procs[k];
      load_uav_job(users_[k], tx[k], w);
      if (had_vm) users_[k].last_rate = uav.rate;
    }

    // AoI, payoff, conjectures.
    for (int k = 0; k < n; ++k) {
      auto& u = users_[k];
      const auto p = payoff(u.aoi, tx[k].energy, rec.payment[k], w.aoi_weight, w.energy_weight);
      rec.aoi[k] = u.aoi;
      rec.energy[k] = tx[k].energy;
      rec.utility[k] = p.utility;
      rec.payoff[k] = p.payoff;
      running_[k] = w.discount * running_[k] + (1.0 - w.discount) * p.payoff;
      const auto done = completions_of(tx[k], uav, static_cast<std::size_t>(k));
      u.aoi = aoi_step(u.aoi, done, j, w, delta_);
      if (bid_of[k] >= 0) {
        u.last_payment = rec.payment[k];
        if (scheme_ == Scheme::deeprl) agents_[k].observe_payment(rec.payment[k]);
      }
      if (scheme_ == Scheme::deeprl)
        pending_[k] = Pending{states_[k], action_index(realised[k], w.packets_per_task), p.payoff};
    }
    rec.discounted_payoff = mean_of(running_);

    world_.step();
    records_.push_back(std::move(rec));
    return records_.back();
  }

  /// Trains on the experiences of the last epoch (their successor states
  /// need the next epoch's arrivals).
  void finish()
  {
    if (finished_ || epoch_ == 0) return;
    begin_epoch(epoch_ + 1);
    finished_ = true;
  }

  void run(long epochs)
  {
    for (long i = 0; i < epochs; ++i) run_epoch();
    finish();
  }

 private:
  struct Pending {
    LocalState state;
    int action = -1;
    double payoff = 0.0;
  };

  // Arrivals, observation, completion and training of the previous
  // experience.
  void begin_epoch(long j)
  {
    const int n = num_users();
    const auto& w = cfg_.world;
    const int bs_count = world_.topology().count();
    states_.resize(n);
    contexts_.resize(n);
    masks_.resize(n);
    for (int k = 0; k < n; ++k) {
      auto& u = users_[k];
      u.buffer = sample_arrival_and_admit(u.buffer, j, arrival_rngs_[k], w.arrival_prob);
      const int bs = world_.serving_bs(k);
      states_[k] = observe(u, world_.uav(), world_.user(k));
      contexts_[k] = make_context(w, delta_, u, bs_count, bs, world_.gain_to_bs(k, bs), world_.gain_to_uav(k));
      masks_[k] = contexts_[k].mask();
    }
    if (scheme_ != Scheme::deeprl || j < 2) return;
    auto& prev = records_.at(j - 2);
    for (int k = 0; k < n; ++k) {
      auto& ag = agents_[k];
      auto& p = pending_[k];
      if (p.action < 0) continue;
      ag.store(Experience{p.state, p.action, p.payoff, states_[k], masks_[k]});
      p.action = -1;
      const auto loss = ag.train();
      prev.loss_q[k] = loss.q;
      prev.loss_post[k] = loss.post;
      ag.sync_target(j - 1);
    }
  }

  SimConfig cfg_;
  Scheme scheme_;
  World world_;
  Auctioneer auctioneer_;
  int delta_;
  std::vector<UserState> users_;
  std::vector<Rng> arrival_rngs_;
  std::vector<DeepAgent> agents_;
  std::vector<double> running_;
  std::vector<Pending> pending_;
  std::vector<LocalState> states_;
  std::vector<ActionContext> contexts_;
  std::vector<std::vector<char>> masks_;
  std::vector<EpochRecord> records_;
  long epoch_ = 0;
  bool finished_ = false;
};

// ---------------------------------------------------------------------------
// Metrics output

inline std::string fmt(double v)
{
  return detail::format_value(v);
}

inline std::string csv_header(int users)
{
  std::string h = "epoch,aoi,energy,utility,payoff,payment,loss_q,loss_post,bids,winners,revenue,discounted_payoff";
  for (int k = 0; k < users; ++k) {
    const auto s = std::to_string(k);
    h += ",aoi_" + s + ",energy_" + s + ",utility_" + s + ",payoff_" + s + ",payment_" + s + ",loss_q_" + s +
         ",loss_post_" + s;
  }
  return h;
}

inline std::string csv_row(const EpochRecord& r)
{
  std::string s = std::to_string(r.epoch);
  for (double v : {mean_of(r.aoi), mean_of(r.energy), mean_of(r.utility), mean_of(r.payoff),
                   mean_of(r.payment), mean_of(r.loss_q), mean_of(r.loss_post)})
    s += ',' + fmt(v);
  s += ',' + std::to_string(r.bids) + ',' + std::to_string(r.winners) + ',' + fmt(r.revenue) + ',' +
       fmt(r.discounted_payoff);
  for (std::size_t k = 0; k < r.aoi.size(); ++k)
    for (double v : {r.aoi[k], r.energy[k], r.utility[k], r.payoff[k], r.payment[k], r.loss_q[k], r.loss_post[k]})
      s += ',' + fmt(v);
  return s;
}

inline void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& records, int users)
{
  os << csv_header(users) << '\n';
  for (const auto& r : records) os << csv_row(r) << '\n';
}

/// Averages over the evaluation window (last `fraction` of the epochs).
struct RunSummary {
  long first_epoch = 0;
  long last_epoch = 0;
  double aoi = 0.0, energy = 0.0, utility = 0.0, payoff = 0.0, payment = 0.0, revenue = 0.0;
};

inline RunSummary summarize(const std::vector<EpochRecord>& records, double fraction)
{
  RunSummary s;
  if (records.empty()) return s;
  const auto n = records.size();
  auto window = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  window = std::clamp<std::size_t>(window, 1, n);
  s.first_epoch = records[n - window].epoch;
  s.last_epoch = records.back().epoch;
  for (std::size_t i = n - window; i < n; ++i) {
    const auto& r = records[i];
    s.aoi += mean_of(r.aoi);
    s.energy += mean_of(r.energy);
    s.utility += mean_of(r.utility);
    s.payoff += mean_of(r.payoff);
    s.payment += mean_of(r.payment);
    s.revenue += r.revenue;
  }
  const double d = static_cast<double>(window);
  s.aoi /= d;
  s.energy /= d;
  s.utility /= d;
  s.payoff /= d;
  s.payment /= d;
  s.revenue /= d;
  return s;
}

/// Mean of the non-NaN values of a per-epoch column over [from, to) rows.
inline double window_mean(const std::vector<double>& column, std::size_t from, std::size_t to)
{
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t i = from; i < to && i < column.size(); ++i)
    if (!std::isnan(column[i])) {
      s += column[i];
      ++c;
    }
  return c ? s / static_cast<double>(c) : std::numeric_limits<double>::quiet_NaN();
}

inline std::vector<double> loss_column(const std::vector<EpochRecord>& records, bool post = false)
{
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(mean_of(post ? r.loss_post : r.loss_q));
  return out;
}

// ---------------------------------------------------------------------------
// Runs and experiments

inline std::ofstream open_output(const std::filesystem::path& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

inline void prepare_dir(const std::filesystem::path& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

inline Simulation run_scheme(const SimConfig& cfg, Scheme scheme)
{
  Simulation sim(cfg, scheme);
  sim.run(cfg.run.epochs);
  return sim;
}

/// Runs one scheme and writes metrics.csv, config.txt and summary.txt.
inline RunSummary simulate_to(const SimConfig& cfg, Scheme scheme, const std::filesystem::path& out)
{
  prepare_dir(out);
  const auto t0 = std::chrono::steady_clock::now();
  auto sim = run_scheme(cfg, scheme);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    auto os = open_output(out / "metrics.csv");
    write_metrics_csv(os, sim.records(), sim.num_users());
  }
  {
    auto os = open_output(out / "config.txt");
    os << dump_config(cfg);
  }
  const auto s = summarize(sim.records(), cfg.run.eval_fraction);
  auto os = open_output(out / "summary.txt");
  os << "scheme = " << scheme_name(scheme) << '\n'
     << "seed = " << cfg.world.seed << '\n'
     << "config_hash = " << std::hex << config_hash(cfg) << std::dec << '\n'
     << "epochs = " << cfg.run.epochs << '\n'
     << "wall_time_s = " << fmt(wall) << '\n'
     << "eval_epochs = " << s.first_epoch << '-' << s.last_epoch << '\n'
     << "avg_aoi = " << fmt(s.aoi) << '\n'
     << "avg_energy = " << fmt(s.energy) << '\n'
     << "avg_utility = " << fmt(s.utility) << '\n'
     << "avg_payoff = " << fmt(s.payoff) << '\n'
     << "avg_payment = " << fmt(s.payment) << '\n'
     << "avg_revenue = " << fmt(s.revenue) << '\n';
  return s;
}

enum class ExperimentKind { convergence, lambda, channels };

inline ExperimentKind parse_experiment(std::string_view s)
{
  if (s == "convergence") return ExperimentKind::convergence;
  if (s == "lambda") return ExperimentKind::lambda;
  if (s == "channels") return ExperimentKind::channels;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

inline constexpr Scheme kAllSchemes[] = {Scheme::deeprl, Scheme::local, Scheme::server, Scheme::uav,
                                         Scheme::greedy};

inline void check_sweep(const SimConfig& cfg, ExperimentKind kind)
{
  const auto& s = cfg.sweep;
  auto bad = [](const char* what) { throw ConfigError(std::string("invalid sweep grid: ") + what); };
  if (kind == ExperimentKind::lambda) {
    if (s.lambda_grid.empty()) bad("lambda_grid is empty");
    for (double l : s.lambda_grid)
      if (!(l >= 0 && l <= 1)) bad("lambda_grid values must be in [0, 1]");
    if (s.sweep_channels < 1) bad("sweep_channels must be >= 1");
  }
  if (kind == ExperimentKind::channels) {
    if (s.channel_grid.empty()) bad("channel_grid is empty");
    for (int c : s.channel_grid)
      if (c < 1) bad("channel_grid values must be >= 1");
    if (!(s.sweep_lambda >= 0 && s.sweep_lambda <= 1)) bad("sweep_lambda must be in [0, 1]");
  }
  if (kind == ExperimentKind::convergence) {
    for (int b : s.batch_grid)
      if (b < 1 || b > cfg.learn.replay_capacity) bad("batch_grid values must be in [1, replay_capacity]");
  }
}

inline std::string summary_columns() { return "aoi,energy,utility,payoff,payment,revenue"; }

inline std::string summary_values(const RunSummary& s)
{
  return fmt(s.aoi) + ',' + fmt(s.energy) + ',' + fmt(s.utility) + ',' + fmt(s.payoff) + ',' + fmt(s.payment) +
         ',' + fmt(s.revenue);
}

/// Writes the experiment's CSV files into `out`.
///   convergence: convergence.csv (per-epoch mean losses), convergence_batch.csv
///                (losses averaged over 100-epoch windows per batch size)
///   lambda:      lambda_sweep.csv, one row per (λ, scheme)
///   channels:    channel_sweep.csv, one row per (|C|, scheme)
inline void run_experiment(ExperimentKind kind, const SimConfig& cfg, const std::filesystem::path& out)
{
  validate(cfg);
  check_sweep(cfg, kind);
  prepare_dir(out);
  if (kind == ExperimentKind::convergence) {
    {
      auto sim = run_scheme(cfg, Scheme::deeprl);
      const auto lq = loss_column(sim.records());
      const auto lp = loss_column(sim.records(), true);
      auto os = open_output(out / "convergence.csv");
      os << "epoch,loss_q,loss_post\n";
      for (std::size_t i = 0; i < lq.size(); ++i)
        os << sim.records()[i].epoch << ',' << fmt(lq[i]) << ',' << fmt(lp[i]) << '\n';
    }
    auto os = open_output(out / "convergence_batch.csv");
    os << "batch_size,epoch_end,loss_q,loss_post\n";
    for (int b : cfg.sweep.batch_grid) {
      auto c = cfg;
      c.learn.batch_size = b;
      auto sim = run_scheme(c, Scheme::deeprl);
      const auto lq = loss_column(sim.records());
      const auto lp = loss_column(sim.records(), true);
      for (std::size_t i = 0; i < lq.size(); i += 100) {
        const std::size_t end = std::min(lq.size(), i + 100);
        os << b << ',' << sim.records()[end - 1].epoch << ',' << fmt(window_mean(lq, i, end)) << ','
           << fmt(window_mean(lp, i, end)) << '\n';
      }
    }
    return;
  }
  const bool lambda = kind == ExperimentKind::lambda;
  auto os = open_output(out / (lambda ? "lambda_sweep.csv" : "channel_sweep.csv"));
  os << (lambda ? "lambda" : "channels") << ",scheme," << summary_columns() << '\n';
  auto point = [&](SimConfig c, const std::string& label) {
    for (auto scheme : kAllSchemes) {
      auto sim = run_scheme(c, scheme);
      os << label << ',' << scheme_name(scheme) << ',' << summary_values(summarize(sim.records(), c.run.eval_fraction))
         << '\n';
    }
  };
  if (lambda) {
    for (double l : cfg.sweep.lambda_grid) {
      auto c = cfg;
      c.world.arrival_prob = l;
      c.world.channels = cfg.sweep.sweep_channels;
      point(c, fmt(l));
    }
  } else {
    for (int ch : cfg.sweep.channel_grid) {
      auto c = cfg;
      c.world.channels = ch;
      c.world.arrival_prob = cfg.sweep.sweep_lambda;
      point(c, std::to_string(ch));
    }
  }
}

}  // namespace agmec
