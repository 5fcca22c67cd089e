#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "agmec/world.hpp"

using namespace agmec;

namespace {

WorldConfig small()
{
  auto w = desk_profile().world;
  w.seed = 3;
  return w;
}

}  // namespace

TEST(Grid, CenterLocateRoundTrip)
{
  Grid g(8, 6, 50.0);
  for (int c = 0; c < g.size(); ++c) EXPECT_EQ(g.locate(g.center(Location{c})).cell, c);
  EXPECT_THROW(g.center(Location{48}), ConfigError);
  EXPECT_THROW(g.check(Location{-1}), ConfigError);
}

TEST(Grid, NeighbourhoodAtCornerAndInside)
{
  Grid g(4, 4, 10.0);
  EXPECT_EQ(g.neighborhood(g.at(0, 0)).size(), 4u);
  EXPECT_EQ(g.neighborhood(g.at(1, 1)).size(), 9u);
  EXPECT_EQ(g.neighborhood(g.at(1, 1)).front(), g.at(1, 1));
}

TEST(Topology, QuadrantsWithRookAdjacencyPartitionCells)
{
  const auto w = small();
  Grid g(w.grid_cols, w.grid_rows, w.cell_size);
  const auto t = make_topology(w, g);
  ASSERT_EQ(t.count(), 4);
  EXPECT_TRUE(t.adjacent(0, 1));
  EXPECT_TRUE(t.adjacent(0, 2));
  EXPECT_FALSE(t.adjacent(0, 3));
  EXPECT_FALSE(t.adjacent(1, 2));
  std::vector<int> per(4, 0);
  for (int c = 0; c < g.size(); ++c) {
    const int b = t.serving_bs(Location{c});
    ASSERT_GE(b, 0);
    ASSERT_LT(b, 4);
    ++per[b];
  }
  for (int n : per) EXPECT_EQ(n, 16);
}

TEST(Topology, ExplicitLayoutAndBadEdges)
{
  auto w = small();
  w.bs_count = 2;
  w.bs_positions = "0:0; 400:400";
  w.bs_edges = "0-1";
  Grid g(w.grid_cols, w.grid_rows, w.cell_size);
  const auto t = make_topology(w, g);
  EXPECT_TRUE(t.adjacent(0, 1));
  EXPECT_EQ(t.serving_bs(g.at(0, 0)), 0);
  EXPECT_EQ(t.serving_bs(g.at(7, 7)), 1);
  w.bs_edges = "0-2";
  EXPECT_THROW(make_topology(w, g), ConfigError);
  w.bs_positions = "0:0";
  w.bs_edges = "";
  EXPECT_THROW(make_topology(w, g), ConfigError);
}

TEST(Mobility, AbsorbingRowStays)
{
  Grid g(3, 3, 10.0);
  const auto m = MobilityModel::stationary(g);
  Rng rng = make_stream(1, 1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(step_mobility(m, g.at(1, 1), rng), g.at(1, 1));
}

TEST(Mobility, InverseCdfSampling)
{
  Grid g(3, 3, 10.0);
  std::vector<MobilityModel::Row> rows(g.size());
  for (int c = 0; c < g.size(); ++c) rows[c] = {{Location{c}, 1.0}};
  rows[g.at(1, 1).cell] = {{g.at(1, 1), 0.5}, {g.at(2, 1), 0.5}};
  const MobilityModel m(g, rows);
  EXPECT_EQ(m.sample(g.at(1, 1), 0.7), g.at(2, 1));
  EXPECT_EQ(m.sample(g.at(1, 1), 0.3), g.at(1, 1));
}

TEST(Mobility, EmpiricalFrequenciesMatchRow)
{
  Grid g(3, 3, 10.0);
  std::vector<MobilityModel::Row> rows(g.size());
  for (int c = 0; c < g.size(); ++c) rows[c] = {{Location{c}, 1.0}};
  const auto mid = g.at(1, 1);
  rows[mid.cell] = {{mid, 0.25}, {g.at(0, 1), 0.1875}, {g.at(2, 1), 0.1875}, {g.at(1, 0), 0.1875}, {g.at(1, 2), 0.1875}};
  const MobilityModel m(g, rows);
  Rng rng = make_stream(9, 9);
  std::vector<int> count(g.size(), 0);
  const int n = 1000000;
  for (int i = 0; i < n; ++i) ++count[step_mobility(m, mid, rng).cell];
  for (const auto& e : rows[mid.cell]) EXPECT_NEAR(count[e.to.cell] / static_cast<double>(n), e.prob, 0.01);
}

TEST(Mobility, RejectsMalformedRows)
{
  Grid g(3, 3, 10.0);
  std::vector<MobilityModel::Row> rows(g.size());
  for (int c = 0; c < g.size(); ++c) rows[c] = {{Location{c}, 1.0}};
  auto bad = rows;
  bad[0] = {{Location{0}, 0.6}};
  EXPECT_THROW(MobilityModel(g, bad), ConfigError);
  bad = rows;
  bad[0] = {{g.at(2, 2), 1.0}};
  EXPECT_THROW(MobilityModel(g, bad), ConfigError);
  bad = rows;
  bad[0] = {{Location{0}, 1.5}, {Location{1}, -0.5}};
  EXPECT_THROW(MobilityModel(g, bad), ConfigError);
  EXPECT_THROW(MobilityModel(g, {}), ConfigError);
}

TEST(Mobility, RandomWalkRowsAreLocalDistributions)
{
  Grid g(8, 8, 50.0);
  Rng rng = make_stream(5, 1);
  const auto m = MobilityModel::random_walk(g, rng);
  for (int c = 0; c < g.size(); ++c) {
    double sum = 0.0;
    for (const auto& e : m.row(Location{c})) {
      EXPECT_GE(e.prob, 0.0);
      sum += e.prob;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_THROW(m.row(Location{64}), ConfigError);
}

TEST(Gain, GroundAndUavExamples)
{
  WorldConfig w;
  EXPECT_NEAR(ground_gain(w, {0, 0}, {100, 0}), 1e-4 * std::pow(100.0, -3.8), 1e-25);
  EXPECT_NEAR(ground_gain(w, {0, 0}, {100, 0}), 2.512e-12, 1e-15);
  EXPECT_DOUBLE_EQ(uav_gain(w, {5, 5}, {5, 5}), 1.4e-8);
  EXPECT_DOUBLE_EQ(ground_gain(w, {0, 0}, {0.5, 0}), 1e-4);
}

TEST(Gain, NonIncreasingInDistance)
{
  WorldConfig w;
  double prev_g = INFINITY, prev_u = INFINITY;
  for (double d = 0; d < 600; d += 7.5) {
    const double gg = ground_gain(w, {0, 0}, {d, 0});
    const double gu = uav_gain(w, {0, 0}, {d, 0});
    EXPECT_GT(gg, 0.0);
    EXPECT_LE(gg, prev_g);
    EXPECT_LE(gu, prev_u);
    prev_g = gg;
    prev_u = gu;
  }
}

TEST(Arrivals, ExamplesAndReplacement)
{
  Rng rng = make_stream(1, 2);
  EXPECT_EQ(sample_arrival_and_admit(TaskBuffer{}, 5, rng, 0.0).arrival, 0);
  EXPECT_EQ(sample_arrival_and_admit(TaskBuffer{}, 5, rng, 1.0).arrival, 5);
  EXPECT_EQ(sample_arrival_and_admit(TaskBuffer{3}, 5, rng, 1.0).arrival, 5);
  EXPECT_EQ(sample_arrival_and_admit(TaskBuffer{3}, 5, rng, 0.0).arrival, 3);
  EXPECT_THROW(sample_arrival_and_admit(TaskBuffer{}, 0, rng, 0.5), ConfigError);
}

TEST(Arrivals, BernoulliRate)
{
  Rng rng = make_stream(2, 3);
  const double lambda = 0.3;
  long hits = 0;
  const long n = 1000000;
  for (long j = 1; j <= n; ++j) hits += sample_arrival_and_admit(TaskBuffer{}, j, rng, lambda).arrival != 0;
  EXPECT_NEAR(hits / static_cast<double>(n), lambda, 0.005);
}

TEST(World, SameSeedSameTrajectory)
{
  World a(small()), b(small());
  for (int j = 0; j < 500; ++j) {
    ASSERT_EQ(a.uav(), b.uav());
    for (int k = 0; k < a.num_users(); ++k) ASSERT_EQ(a.user(k), b.user(k));
    a.step();
    b.step();
  }
}

TEST(World, MovesAtMostOneCell)
{
  World w(small());
  const auto& g = w.grid();
  std::set<int> visited;
  for (int j = 0; j < 2000; ++j) {
    const auto before = w.user(0);
    w.step();
    const auto after = w.user(0);
    EXPECT_LE(std::abs(g.col(after) - g.col(before)), 1);
    EXPECT_LE(std::abs(g.row(after) - g.row(before)), 1);
    visited.insert(after.cell);
  }
  EXPECT_GT(visited.size(), 10u);
}

TEST(World, PerUserStreamsIndependentOfUserCount)
{
  auto w1 = small();
  auto w2 = small();
  w2.num_users = 5;
  World a(w1), b(w2);
  // Only the per-MU step streams are shared; place both MUs identically.
  b.place_user(0, a.user(0));
  b.set_user_model(0, a.user_model(0));
  for (int j = 0; j < 200; ++j) {
    a.step();
    b.step();
    ASSERT_EQ(a.user(0), b.user(0));
  }
}
