#include <gtest/gtest.h>

#include <cmath>

#include "agmec/link.hpp"

using namespace agmec;

namespace {
constexpr double kNoise = 3.981071705534973e-18;
}

TEST(Association, UavSticksWithoutTask)
{
  const auto a = update_association(4, 1, Offload::none, 4);
  EXPECT_EQ(a.current, 4);
  EXPECT_FALSE(a.handover());
}

TEST(Association, FollowsCoverageWithHandover)
{
  const auto a = update_association(2, 3, Offload::none, 4);
  EXPECT_EQ(a.current, 3);
  EXPECT_TRUE(a.handover());
  EXPECT_FALSE(update_association(3, 3, Offload::local, 4).handover());
}

TEST(Association, SchedulingRetargets)
{
  const auto uav = update_association(1, 1, Offload::uav, 4);
  EXPECT_EQ(uav.current, 4);
  EXPECT_TRUE(uav.handover());
  const auto srv = update_association(4, 2, Offload::server, 4);
  EXPECT_EQ(srv.current, 2);
  EXPECT_TRUE(srv.handover());
  EXPECT_THROW(update_association(5, 0, Offload::none, 4), ConfigError);
  EXPECT_THROW(update_association(0, 4, Offload::none, 4), ConfigError);
}

TEST(TransmissionTime, Examples)
{
  EXPECT_EQ(transmission_time(1.0, 0.01, false), 1.0);
  EXPECT_EQ(transmission_time(1.0, 0.01, true), 0.99);
  EXPECT_EQ(transmission_time(1.0, 0.0, true), 1.0);
}

TEST(TxEnergy, ExampleAndZero)
{
  EXPECT_EQ(tx_energy(1e-10, 1.0, 1e6, kNoise, 0, 5e5), 0.0);
  EXPECT_NEAR(tx_energy(1e-10, 1.0, 1e6, kNoise, 2, 5e5), 0.0398107, 1e-6);
}

TEST(TxEnergy, ConvexIncreasingInPackets)
{
  double prev = 0.0, prev_step = 0.0;
  for (int r = 1; r <= 10; ++r) {
    const double e = tx_energy(3e-11, 0.99, 1e6, kNoise, r, 5e5);
    EXPECT_GT(e, prev);
    EXPECT_GT(e - prev, prev_step);
    prev_step = e - prev;
    prev = e;
  }
  EXPECT_GT(tx_energy(3e-11, 1.0, 1e6, kNoise, 4, 5e5), 2 * tx_energy(3e-11, 1.0, 1e6, kNoise, 2, 5e5));
}

TEST(MaxPackets, ExampleClampedByBacklog)
{
  EXPECT_EQ(max_packets(1e-10, 1.0, 1e6, kNoise, 3.0, 5e5, 10), 10);
  EXPECT_EQ(max_packets(1e-10, 1.0, 1e6, kNoise, 3.0, 5e5, 100), 12);
  EXPECT_EQ(max_packets(1e-30, 1.0, 1e6, kNoise, 3.0, 5e5, 10), 0);
  EXPECT_EQ(max_packets(1e-10, 1.0, 1e6, kNoise, 3.0, 5e5, 0), 0);
}

TEST(MaxPackets, EnergyBoundIsTight)
{
  for (double g = 1e-14; g < 1e-6; g *= 1.7)
    for (double t : {1.0, 0.99}) {
      const int r = max_packets(g, t, 1e6, kNoise, 3.0, 5e5, 1000);
      EXPECT_LE(tx_energy(g, t, 1e6, kNoise, r, 5e5), 3.0 * t + 1e-12);
      if (r < 1000) {
        EXPECT_GT(tx_energy(g, t, 1e6, kNoise, r + 1, 5e5), 3.0 * t);
      }
    }
}
