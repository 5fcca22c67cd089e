// Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "agmec/agmec.hpp"

using namespace agmec;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Instance {
  Topology topo = Topology::graph_only(1, {});
  int channels = 1;
  std::vector<Bid> bids;
};

// Random auction instance: B ≤ 4 with random adjacency, |K| ≤ 6, |C| ≤ 4.
// Half the instances use small integer valuations so ties are common.
Instance random_instance(Rng& rng)
{
  Instance in;
  const int b = 1 + static_cast<int>(uniform_index(rng, 4));
  std::vector<std::pair<int, int>> edges;
  for (int x = 0; x < b; ++x)
    for (int y = x + 1; y < b; ++y)
      if (uniform01(rng) < 0.5) edges.emplace_back(x, y);
  in.topo = Topology::graph_only(b, edges);
  in.channels = 1 + static_cast<int>(uniform_index(rng, 4));
  const int k = static_cast<int>(uniform_index(rng, 7));
  const bool integer = uniform01(rng) < 0.5;
  std::vector<int> ids(10);
  std::iota(ids.begin(), ids.end(), 0);
  for (int i = 0; i < k; ++i) std::swap(ids[i], ids[i + uniform_index(rng, ids.size() - i)]);
  for (int i = 0; i < k; ++i) {
    Bid bid;
    bid.user = ids[i];
    bid.bs = static_cast<int>(uniform_index(rng, b));
    const double d = uniform01(rng);
    bid.demand = d < 0.6 ? Demand::server : d < 0.9 ? Demand::uav : Demand::none;
    bid.valuation = integer ? static_cast<double>(uniform_index(rng, 6)) : 20.0 * uniform01(rng);
    in.bids.push_back(bid);
  }
  return in;
}

Outcome criterion1()
{
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_stream(2024, 1);
  int mismatches = 0;
  for (int n = 0; n < 1000; ++n) {
    const auto in = random_instance(rng);
    Auctioneer a(in.topo, in.channels);
    const auto fast = a.run(in.bids);
    const auto slow = oracle_enumerate(in.bids, in.channels, in.topo);
    if (fast.welfare != slow.welfare || fast.winners != slow.winners || fast.payments != slow.payments ||
        !check_feasible_allocation(fast.channel, in.bids, in.topo, in.channels))
      ++mismatches;
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 60.0,
          "1000 instances, " + std::to_string(mismatches) + " mismatches vs enumeration, " + num(t) + " s"};
}

Outcome criterion2()
{
  Rng rng = make_stream(2024, 2);
  int violations = 0, checks = 0;
  for (int n = 0; n < 200; ++n) {
    auto in = random_instance(rng);
    if (in.bids.empty()) in.bids.push_back(Bid{0, 0, 1.0, Demand::server});
    Auctioneer a(in.topo, in.channels);
    const auto truth = a.run(in.bids);
    for (std::size_t k = 0; k < in.bids.size(); ++k) {
      if (truth.payments[k] < 0) ++violations;
      if (truth.winners[k] && in.bids[k].valuation < truth.payments[k] - 1e-9) ++violations;
      if (!truth.winners[k] && truth.payments[k] != 0) ++violations;
    }
    for (int d = 0; d < 20; ++d) {
      const auto k = uniform_index(rng, in.bids.size());
      const double nu = in.bids[k].valuation;
      const double honest = (truth.winners[k] ? nu : 0.0) - truth.payments[k];
      auto lie = in.bids;
      lie[k].valuation = 25.0 * uniform01(rng);
      const auto r = a.run(lie);
      const double surplus = (r.winners[k] ? nu : 0.0) - r.payments[k];
      ++checks;
      if (surplus > honest + 1e-9) ++violations;
    }
  }
  return {violations == 0, std::to_string(checks) + " deviations, " + std::to_string(violations) + " violations"};
}

Outcome criterion3()
{
  const WorldConfig w;
  const int delta = local_epochs_required(w);
  const double e0 = local_cpu_energy(0, w, delta), e1 = local_cpu_energy(1, w, delta),
               e5 = local_cpu_energy(5, w, delta);
  const double c1 = vm_service_rate(w.vm_rate, w.vm_interference, 1);
  const double c2 = vm_service_rate(w.vm_rate, w.vm_interference, 2);
  const double f = tx_energy(1e-10, 1.0, w.bandwidth, w.noise_density, 2, w.bits_per_packet);
  const bool ok = delta == 7 && e0 == 0.0 && std::abs(e1 - 0.5) < 1e-12 && e5 == 1.0 &&
                  std::abs(c1 - 2e7) <= 1e-9 * 2e7 && std::abs(c2 - 2e7 / 1.2) <= 1e-9 * 2e7 / 1.2 &&
                  std::abs(c2 - 1.66667e7) <= 1e-5 * 1.66667e7 && std::abs(f - 0.03981) <= 1e-4 * 0.03981;
  return {ok, "delta " + std::to_string(delta) + ", cpu energy {" + num(e0) + ", " + num(e1) + ", " + num(e5) +
                  "} J, chi {" + num(c1) + ", " + num(c2) + "}, tx energy " + num(f) + " J"};
}

Outcome criterion4()
{
  const WorldConfig w;
  const int delta = 7;
  int bad = 0;
  // Linear growth and cap.
  double a = 0.0;
  for (int j = 1; j <= 40; ++j) {
    const double next = aoi_step(a, {}, j, w, delta);
    if (next != std::min(a + 1.0, 30.0)) ++bad;
    a = next;
  }
  const std::int64_t j = 50;
  const Completion local{Pipeline::local, j - delta + 1, 0.0};
  const Completion server{Pipeline::server, j - 3, 0.0};
  const Completion uav{Pipeline::uav, j - 5, 1e6 / 2e7};
  const double al = aoi_step(20.0, std::span(&local, 1), j, w, delta);
  const double as = aoi_step(20.0, std::span(&server, 1), j, w, delta);
  const double au = aoi_step(20.0, std::span(&uav, 1), j, w, delta);
  if (std::abs(al - 6.5) > 1e-9 || std::abs(as - 4.0) > 1e-9 || std::abs(au - 5.05) > 1e-9) ++bad;
  // Two-outcome truth table: the fresher arrival sets the age.
  const Pipeline kinds[] = {Pipeline::local, Pipeline::server, Pipeline::uav};
  int cases = 0;
  for (auto p1 : kinds)
    for (auto p2 : kinds) {
      if (p1 == p2) continue;
      for (std::int64_t a1 = j - 12; a1 <= j; ++a1)
        for (std::int64_t a2 = j - 12; a2 <= j; ++a2) {
          if (a1 == a2) continue;
          const Completion both[] = {{p1, a1, 0.3}, {p2, a2, 0.3}};
          const Completion& fresh = a1 > a2 ? both[0] : both[1];
          ++cases;
          if (aoi_step(20.0, both, j, w, delta) != aoi_step(20.0, std::span(&fresh, 1), j, w, delta)) ++bad;
        }
    }
  return {bad == 0, "branches " + num(al) + "/" + num(as) + "/" + num(au) + " s, " + std::to_string(cases) +
                        " two-outcome cases, " + std::to_string(bad) + " failures"};
}

Outcome criterion5()
{
  SimConfig c;
  c.world.num_users = 1;
  c.world.arrival_prob = 1.0;
  c.run.epochs = 10000;
  Simulation sim(c, Scheme::local);
  sim.run(c.run.epochs);
  const auto s = summarize(sim.records(), 1.0);
  const bool ok = std::abs(s.aoi - 9.5) <= 0.01 && std::abs(s.energy - 0.9286) <= 0.001;
  return {ok, "avg AoI " + num(s.aoi) + " s, avg energy " + num(s.energy) + " J/epoch"};
}

Outcome criterion6()
{
  Rng rng = make_stream(2024, 6);
  double worst = 0.0;
  int kinks = 0;
  for (int n = 0; n < 100; ++n) {
    const int in = 1 + static_cast<int>(uniform_index(rng, 16));
    const int h1 = 1 + static_cast<int>(uniform_index(rng, 32));
    const int h2 = 1 + static_cast<int>(uniform_index(rng, 32));
    const int out = 1 + static_cast<int>(uniform_index(rng, 40));
    auto net = Mlp::he_init({in, h1, h2, out}, rng);
    for (auto& p : net.params()) p += 0.1 * standard_normal(rng);  // nonzero biases
    std::vector<double> x(in), g(out);
    for (auto& v : x) v = standard_normal(rng);
    for (auto& v : g) v = standard_normal(rng);
    Mlp::Cache cache;
    net.forward(x, cache);
    std::vector<double> grad(net.params().size(), 0.0);
    net.backward(cache, g, grad);
    // ReLU pattern of the hidden layers; a difference quotient is only valid
    // when both probes stay on the same linear piece.
    auto pattern = [](const Mlp::Cache& c) {
      std::vector<char> on;
      for (std::size_t l = 1; l + 1 < c.act.size(); ++l)
        for (double v : c.act[l]) on.push_back(v > 0.0);
      return on;
    };
    const auto base = pattern(cache);
    auto loss = [&](bool& same) {
      Mlp::Cache c;
      const auto y = net.forward(x, c);
      same = same && pattern(c) == base;
      double s = 0.0;
      for (int i = 0; i < out; ++i) s += g[i] * y[i];
      return s;
    };
    for (std::size_t p = 0; p < grad.size(); ++p) {
      const double keep = net.params()[p];
      double fd = 0.0;
      bool same = false;
      for (double h = 1e-5; !same && h >= 1e-9; h /= 10) {
        same = true;
        net.params()[p] = keep + h;
        const double up = loss(same);
        net.params()[p] = keep - h;
        const double down = loss(same);
        fd = (up - down) / (2 * h);
      }
      net.params()[p] = keep;
      if (!same) ++kinks;
      const double scale = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
      worst = std::max(worst, std::abs(fd - grad[p]) / scale);
    }
  }
  return {worst < 1e-4, "100 networks, max relative error " + num(worst) + ", " + std::to_string(kinks) +
                            " probes straddling a ReLU kink"};
}

Outcome criterion7()
{
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_oracle_suite(200000);
  const double t = seconds_since(t0);
  const bool ok = r.exact_residual < 1e-9 && r.learned_residual < 0.05 && r.tiny_policy.fraction() >= 0.95 &&
                  t < 120.0;
  return {ok, std::to_string(r.tiny_states) + " states, residual " + num(r.learned_residual) + ", policy match " +
                  std::to_string(r.tiny_policy.matched) + "/" + std::to_string(r.tiny_policy.compared) + ", " +
                  num(t) + " s"};
}

struct DeskRun {
  double ratio = 0.0;
  double peak = 0.0;
  double last = 0.0;
  RunSummary deeprl, local, server;
};

std::vector<DeskRun> desk_runs(double& seconds)
{
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<DeskRun> runs;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto c = desk_profile();
    c.world.seed = seed;
    DeskRun r;
    Simulation sim(c, Scheme::deeprl);
    sim.run(c.run.epochs);
    const auto loss = loss_column(sim.records());
    r.peak = std::max(window_mean(loss, 0, 1000), window_mean(loss, 1000, 2000));
    r.last = window_mean(loss, loss.size() - 1000, loss.size());
    r.ratio = r.last / r.peak;
    r.deeprl = summarize(sim.records(), c.run.eval_fraction);
    r.local = summarize(run_scheme(c, Scheme::local).records(), c.run.eval_fraction);
    r.server = summarize(run_scheme(c, Scheme::server).records(), c.run.eval_fraction);
    runs.push_back(r);
  }
  seconds = seconds_since(t0);
  return runs;
}

Outcome criterion8(const std::vector<DeskRun>& runs, double seconds)
{
  bool ok = seconds < 600.0;
  std::string d;
  for (const auto& r : runs) {
    ok = ok && r.ratio < 0.3;
    d += (d.empty() ? "" : ", ") + num(r.ratio);
  }
  return {ok, "last/peak DQN-I loss per seed " + d + " (limit 0.3), " + num(seconds) + " s"};
}

Outcome criterion9(const std::vector<DeskRun>& runs)
{
  int better = 0;
  std::string d;
  for (const auto& r : runs) {
    if (r.deeprl.utility >= r.local.utility && r.deeprl.utility >= r.server.utility) ++better;
    d += (d.empty() ? "" : "; ") + num(r.deeprl.utility) + " vs " + num(r.local.utility) + "/" +
         num(r.server.utility);
  }
  const bool a = better >= 2;

  std::vector<double> greedy_aoi;
  std::vector<std::string> local_csv;
  for (int ch : {1, 2, 4}) {
    auto c = desk_profile();
    c.world.channels = ch;
    c.world.arrival_prob = c.sweep.sweep_lambda;
    greedy_aoi.push_back(summarize(run_scheme(c, Scheme::greedy).records(), c.run.eval_fraction).aoi);
    std::ostringstream os;
    const auto sim = run_scheme(c, Scheme::local);
    write_metrics_csv(os, sim.records(), sim.num_users());
    local_csv.push_back(os.str());
  }
  const bool b = greedy_aoi[1] <= greedy_aoi[0] && greedy_aoi[2] <= greedy_aoi[1];
  const bool c = local_csv[1] == local_csv[0] && local_csv[2] == local_csv[0];
  return {a && b && c, std::string("(a) ") + (a ? "pass" : "FAIL") + " utility deeprl vs local/server " + d +
                           "; (b) " + (b ? "pass" : "FAIL") + " greedy AoI at |C|=1,2,4: " + num(greedy_aoi[0]) +
                           ", " + num(greedy_aoi[1]) + ", " + num(greedy_aoi[2]) + "; (c) " + (c ? "pass" : "FAIL") +
                           " local metrics identical across |C|"};
}

Outcome criterion10()
{
  auto c = desk_profile();
  c.run.epochs = 2000;
  const auto base = std::filesystem::temp_directory_path() / "agmec_acceptance_det";
  std::filesystem::remove_all(base);
  simulate_to(c, Scheme::deeprl, base / "a");
  simulate_to(c, Scheme::deeprl, base / "b");
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const auto x = read(base / "a" / "metrics.csv");
  const auto y = read(base / "b" / "metrics.csv");
  std::filesystem::remove_all(base);
  return {!x.empty() && x == y, "deeprl metrics.csv, 2000 epochs, " + std::to_string(x.size()) + " bytes, " +
                                    (x == y ? "identical" : "different")};
}

}  // namespace

int main()
{
  int failed = 0;
  auto report = [&](int n, const Outcome& o) {
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  };
  auto guarded = [&](int n, const std::function<Outcome()>& f) {
    try {
      report(n, f());
    } catch (const std::exception& e) {
      report(n, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded(1, criterion1);
  guarded(2, criterion2);
  guarded(3, criterion3);
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  double seconds = 0.0;
  std::vector<DeskRun> runs;
  try {
    runs = desk_runs(seconds);
  } catch (const std::exception& e) {
    report(8, {false, std::string("exception: ") + e.what()});
    report(9, {false, "desk runs unavailable"});
  }
  if (!runs.empty()) {
    report(8, criterion8(runs, seconds));
    guarded(9, [&] { return criterion9(runs); });
  }
  guarded(10, criterion10);
  return failed == 0 ? 0 : 1;
}
