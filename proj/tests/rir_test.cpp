// tests/rir_test.cpp

// Copyright 2026  The roomforge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "roomforge/rir.hpp"
#include "test_support.hpp"

using namespace roomforge;
using roomforge::testing::brute_force_rir;
using roomforge::testing::oracle_place;

namespace {

constexpr double kPi = std::numbers::pi;

RoomConfig cube(double side, double beta) {
  RoomConfig r;
  r.dims = {side, side, side};
  r.wall_beta.fill(beta);
  return r;
}

const Vec3 kSrc{2, 2, 2};
const Vec3 kMic{4, 2, 2};

struct RandomGeometry {
  RoomConfig room;
  Vec3 src;
  Vec3 mic;
};

RandomGeometry random_geometry(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomGeometry out;
  out.room.dims = {2.0 + 6.0 * u(g), 2.0 + 6.0 * u(g), 2.0 + 2.0 * u(g)};
  for (auto& b : out.room.wall_beta) b = 0.95 * u(g);
  auto inside = [&] {
    Vec3 p;
    for (std::size_t a = 0; a < 3; ++a) p[a] = 0.1 + (out.room.dims[a] - 0.2) * u(g);
    return p;
  };
  out.src = inside();
  do {
    out.mic = inside();
  } while (distance(out.src, out.mic) < 0.05);
  return out;
}

}  // namespace

TEST(EnumerateImages, AnechoicHasOnlyTheDirectPath) {
  const auto arrivals = enumerate_images(cube(6, 0.0), kSrc, kMic, 3);
  ASSERT_EQ(arrivals.size(), 1u);
  EXPECT_DOUBLE_EQ(arrivals[0].distance, 2.0);
  EXPECT_NEAR(arrivals[0].amplitude, 1.0 / (8.0 * kPi), 1e-15);
  EXPECT_NEAR(arrivals[0].amplitude, 0.0397887, 1e-7);
  EXPECT_EQ(arrivals[0].order, 0);
}

TEST(EnumerateImages, FirstOrderMirrors) {
  const auto arrivals = enumerate_images(cube(6, 0.9), kSrc, kMic, 1);
  ASSERT_EQ(arrivals.size(), 7u);
  const double s20 = 4.47213595499958;
  const double s68 = 8.246211251235321;
  const double expected[] = {2.0, s20, s20, 6.0, 6.0, s68, s68};
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_NEAR(arrivals[i].distance, expected[i], 1e-12);
    const double beta = i == 0 ? 1.0 : 0.9;
    EXPECT_NEAR(arrivals[i].amplitude, beta / (4.0 * kPi * expected[i]), 1e-12);
    EXPECT_NEAR(arrivals[i].delay_samples, expected[i] * 16000.0 / 343.0, 1e-9);
  }
  const auto floor = std::find_if(arrivals.begin(), arrivals.end(), [](const ImageArrival& a) {
    return a.lattice == std::array<int, 3>{0, 0, 0} && a.parity == std::array<int, 3>{0, 0, 1};
  });
  ASSERT_NE(floor, arrivals.end());
  EXPECT_NEAR(floor->distance, s20, 1e-12);
  EXPECT_NEAR(floor->amplitude, 0.9 / (4.0 * kPi * s20), 1e-15);
}

TEST(EnumerateImages, OrderZeroIsDirectOnly) {
  for (double beta : {0.0, 0.3, 0.97}) {
    const auto arrivals = enumerate_images(cube(6, beta), kSrc, kMic, 0);
    ASSERT_EQ(arrivals.size(), 1u);
    EXPECT_DOUBLE_EQ(arrivals[0].distance, 2.0);
  }
}

TEST(EnumerateImages, DegenerateGeometry) {
  EXPECT_THROW(enumerate_images(cube(6, 0.5), kSrc, kSrc, 1), GeometryError);
  EXPECT_THROW(enumerate_images(cube(6, 0.5), {7, 2, 2}, kMic, 1), GeometryError);
  EXPECT_THROW(enumerate_images(cube(6, 0.5), kSrc, kMic, -1), GeometryError);
}

TEST(EnumerateImages, SortedAndConsistent) {
  std::mt19937_64 g(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto geo = random_geometry(g);
    const auto arrivals = enumerate_images(geo.room, geo.src, geo.mic, 3);
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
      const auto& a = arrivals[i];
      EXPECT_GT(a.distance, 0.0);
      EXPECT_GT(a.amplitude, 0.0);
      EXPECT_LE(a.order, 3);
      EXPECT_NEAR(a.delay_samples, a.distance * 16000.0 / 343.0, 1e-9);
      if (i > 0) {
        EXPECT_LE(arrivals[i - 1].delay_samples, a.delay_samples);
      }
    }
  }
}

TEST(EnumerateImages, FirstArrivalIsDirectPath) {
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto geo = random_geometry(g);
    const auto arrivals = enumerate_images(geo.room, geo.src, geo.mic, 2);
    ASSERT_FALSE(arrivals.empty());
    const double direct = distance(geo.src, geo.mic) * 16000.0 / 343.0;
    EXPECT_NEAR(arrivals.front().delay_samples, direct, 1e-9);
  }
}

TEST(EnumerateImages, HigherOrderKeepsEveryArrival) {
  std::mt19937_64 g(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto geo = random_geometry(g);
    for (int k = 0; k < 4; ++k) {
      const auto lower = enumerate_images(geo.room, geo.src, geo.mic, k);
      const auto higher = enumerate_images(geo.room, geo.src, geo.mic, k + 1);
      ASSERT_LT(lower.size(), higher.size());
      std::size_t j = 0;
      for (const auto& a : lower) {
        while (j < higher.size() && !(higher[j] == a)) ++j;
        ASSERT_LT(j, higher.size()) << "arrival lost going from order " << k;
        ++j;
      }
      std::size_t low_count = 0;
      for (const auto& a : higher) low_count += a.order <= k;
      EXPECT_EQ(low_count, lower.size());
    }
  }
}

TEST(EnumerateImages, AmplitudeMonotoneInEachBeta) {
  std::mt19937_64 g(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto geo = random_geometry(g);
    const auto base = enumerate_images(geo.room, geo.src, geo.mic, 3);
    for (std::size_t w = 0; w < 6; ++w) {
      RoomConfig louder = geo.room;
      louder.wall_beta[w] = std::min(0.99, louder.wall_beta[w] + 0.02);
      const auto up = enumerate_images(louder, geo.src, geo.mic, 3);
      for (const auto& a : base) {
        const auto it = std::find_if(up.begin(), up.end(), [&](const ImageArrival& b) {
          return b.lattice == a.lattice && b.parity == a.parity;
        });
        ASSERT_NE(it, up.end());
        EXPECT_GE(it->amplitude, a.amplitude);
      }
    }
  }
}

TEST(PlaceImpulse, IntegerDelayIsOneTap) {
  std::vector<double> buf(256, 0.0);
  place_impulse(buf, 100.0, 0.5);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    if (i == 100) EXPECT_EQ(buf[i], 0.5);
    else EXPECT_LT(std::abs(buf[i]), 1e-12);
  }
}

TEST(PlaceImpulse, HalfSampleDelayIsSymmetric) {
  std::vector<double> buf(256, 0.0);
  place_impulse(buf, 100.5, 0.5);
  double sum = 0.0;
  for (double v : buf) sum += v;
  EXPECT_NEAR(sum, 0.5, 0.005);
  EXPECT_NEAR(sum, 0.49999713, 1e-7);
  for (int k = 0; k < 40; ++k) {
    EXPECT_NEAR(buf[100 - k], buf[101 + k], 1e-12) << k;
  }
  EXPECT_GT(buf[100], 0.3);
}

TEST(PlaceImpulse, MatchesDirectFormula) {
  std::mt19937_64 g(15);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double delay = u(g);
    std::vector<double> got(256, 0.0), want(256, 0.0);
    place_impulse(got, delay, 0.7);
    oracle_place(want, delay, 0.7);
    EXPECT_LT(roomforge::testing::max_abs_diff(got, want), 1e-12) << delay;
  }
}

TEST(PlaceImpulse, IsAdditive) {
  std::vector<double> twice(300, 0.0), once(300, 0.0);
  place_impulse(twice, 123.37, 0.25);
  place_impulse(twice, 123.37, 0.25);
  place_impulse(once, 123.37, 0.5);
  EXPECT_LT(roomforge::testing::max_abs_diff(twice, once), 1e-15);
}

TEST(PlaceImpulse, DropsTapsOutsideBuffer) {
  std::vector<double> buf(20, 0.0);
  place_impulse(buf, 3.3, 1.0);
  place_impulse(buf, 18.6, 1.0);
  place_impulse(buf, 500.2, 1.0);
  std::vector<double> want(20, 0.0);
  oracle_place(want, 3.3, 1.0);
  oracle_place(want, 18.6, 1.0);
  EXPECT_LT(roomforge::testing::max_abs_diff(buf, want), 1e-12);
  EXPECT_THROW(place_impulse(buf, -0.5, 1.0), SignalError);
}

TEST(ComputeRir, DirectPathPulse) {
  const auto h = compute_rir(cube(6, 0.0), kSrc, kMic, 2048);
  ASSERT_EQ(h.samples.size(), 2048u);
  const double delay = 2.0 / 343.0 * 16000.0;
  const auto [pos, amp] = roomforge::testing::bandlimited_peak(h.samples, delay);
  EXPECT_NEAR(pos, 93.294, 0.5);
  EXPECT_NEAR(amp, 1.0 / (8.0 * kPi), 0.02 / (8.0 * kPi));
  double total = 0.0, near = 0.0;
  for (std::size_t i = 0; i < h.samples.size(); ++i) {
    const double e = h.samples[i] * h.samples[i];
    total += e;
    if (std::abs(static_cast<double>(i) - pos) <= 40.0) near += e;
  }
  EXPECT_GE(near / total, 0.99);
}

TEST(ComputeRir, AnechoicEqualsSinglePlacement) {
  const auto h = compute_rir(cube(6, 0.0), kSrc, kMic, 2048);
  std::vector<double> want(2048, 0.0);
  place_impulse(want, 2.0 * 16000.0 / 343.0, 1.0 / (4.0 * kPi * 2.0));
  EXPECT_EQ(h.samples, want);
}

TEST(ComputeRir, FirstOrderPulseGroups) {
  const auto h = compute_rir(cube(6, 0.9), kSrc, kMic, 2048, 1);
  std::vector<double> want(2048, 0.0);
  const double s20 = 4.47213595499958;
  const double s68 = 8.246211251235321;
  const double dists[] = {2.0, s20, s20, 6.0, 6.0, s68, s68};
  for (std::size_t i = 0; i < 7; ++i) {
    oracle_place(want, dists[i] * 16000.0 / 343.0, (i == 0 ? 1.0 : 0.9) / (4.0 * kPi * dists[i]));
  }
  EXPECT_LT(roomforge::testing::max_abs_diff(h.samples, want), 1e-12);
  for (double d : {2.0, s20, 6.0, s68}) {
    const double delay = d * 16000.0 / 343.0;
    const auto centre = static_cast<std::size_t>(std::lround(delay));
    double local = 0.0;
    for (std::size_t i = centre - 1; i <= centre + 1; ++i) local = std::max(local, std::abs(h.samples[i]));
    EXPECT_GT(local, 0.5 / (4.0 * kPi * d)) << d;
  }
}

TEST(ComputeRir, MatchesBruteForceOracle) {
  std::mt19937_64 g(16);
  for (int trial = 0; trial < 10; ++trial) {
    const auto geo = random_geometry(g);
    for (int order = 0; order <= 2; ++order) {
      const auto h = compute_rir(geo.room, geo.src, geo.mic, 1024, order);
      const auto want = brute_force_rir(geo.room, geo.src, geo.mic, 1024, order);
      EXPECT_LT(roomforge::testing::max_abs_diff(h.samples, want), 1e-9);
    }
  }
}

TEST(ComputeRir, DefaultLatticeCoversBuffer) {
  RoomConfig room = cube(3.0, 0.7);
  room.dims.z = 2.5;
  const Vec3 src{1.0, 1.2, 1.1}, mic{2.1, 1.9, 1.4};
  const std::size_t len = 400;
  const auto h = compute_rir(room, src, mic, len);
  std::vector<double> want(len, 0.0);
  for (const auto& a : enumerate_images(room, src, mic, 16)) oracle_place(want, a.delay_samples, a.amplitude);
  EXPECT_LT(roomforge::testing::max_abs_diff(h.samples, want), 1e-12);
}

TEST(ComputeRir, LinearInAmplitudeScale) {
  std::mt19937_64 g(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto geo = random_geometry(g);
    const double c = 0.1 + 3.0 * std::uniform_real_distribution<double>(0, 1)(g);
    const auto h = compute_rir(geo.room, geo.src, geo.mic, 800, 2);
    std::vector<double> scaled(800, 0.0);
    for (const auto& a : enumerate_images(geo.room, geo.src, geo.mic, 2)) {
      place_impulse(scaled, a.delay_samples, c * a.amplitude);
    }
    for (std::size_t i = 0; i < 800; ++i) EXPECT_NEAR(scaled[i], c * h.samples[i], 1e-12);
  }
}

TEST(ComputeRir, DeterministicAndFinite) {
  const auto a = compute_rir(cube(5, 0.8), {1, 2, 1.5}, {3.5, 2.5, 1.2}, 4000);
  const auto b = compute_rir(cube(5, 0.8), {1, 2, 1.5}, {3.5, 2.5, 1.2}, 4000);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_EQ(a.room_hash, room_hash(cube(5, 0.8)));
  for (double v : a.samples) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(compute_rir(cube(5, 0.8), {1, 2, 1.5}, {1, 2, 1.5}, 100), GeometryError);
  EXPECT_THROW(compute_rir(cube(5, 0.8), {1, 2, 1.5}, {3, 2, 1.5}, 0), SignalError);
}

TEST(EnergyDecay, SinglePulse) {
  std::vector<double> h(1000, 0.0);
  h[500] = 0.3;
  const auto edc = energy_decay_curve(std::span<const double>(h));
  for (std::size_t i = 0; i <= 500; ++i) EXPECT_EQ(edc[i], 0.0);
  for (std::size_t i = 501; i < h.size(); ++i) EXPECT_EQ(edc[i], kEdcFloorDb);
}

TEST(EnergyDecay, ExponentialDecayCrossing) {
  const std::size_t n = 16000;
  std::mt19937_64 g(18);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> h(2 * n);
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = u(g) * std::pow(10.0, -3.0 * i / n);
  const auto edc = energy_decay_curve(std::span<const double>(h));
  const auto crossing = decay_crossing(edc, -60.0);
  ASSERT_TRUE(crossing.has_value());
  EXPECT_NEAR(static_cast<double>(*crossing), static_cast<double>(n), 0.1 * n);
}

TEST(EnergyDecay, ScaleInvariantAndMonotone) {
  const auto h = compute_rir(cube(5, 0.85), {1, 2, 1.5}, {3.5, 2.5, 1.2}, 6000);
  auto scaled = h.samples;
  for (auto& v : scaled) v *= -7.5;
  const auto a = energy_decay_curve(h);
  const auto b = energy_decay_curve(std::span<const double>(scaled));
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a[0], 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i], b[i], 1e-9);
    if (i > 0) {
      EXPECT_LE(a[i], a[i - 1] + 1e-12);
    }
  }
}

TEST(EnergyDecay, AllZeroThrows) {
  std::vector<double> h(10, 0.0);
  EXPECT_THROW(energy_decay_curve(std::span<const double>(h)), SignalError);
}
