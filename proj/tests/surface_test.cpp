#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hats/hats.hpp"
#include "hats/surface.hpp"
#include "oracles.hpp"

namespace hats {
namespace {

constexpr double kTol = 1e-9;

void expect_matches(const Surface& s, const testing::SparseSurface& ref, double tol = kTol) {
  const int rho = s.rho();
  for (int zy = -rho; zy <= rho; ++zy)
    for (int zx = -rho; zx <= rho; ++zx)
      for (Polarity q : {Polarity::Off, Polarity::On}) {
        const auto it = ref.find({zx, zy, sign(q)});
        const double expected = it == ref.end() ? 0.0 : it->second;
        EXPECT_NEAR(s.at(zx, zy, q), expected, tol) << "z=(" << zx << "," << zy << ") q=" << sign(q);
      }
}

TEST(LastEventSurface, EmptyStateIsZero) {
  const PixelLastTime state({8, 8});
  const Surface s = last_event_surface(Event{4, 4, 100, Polarity::On}, state, {2, 50.0, 10});
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(LastEventSurface, SingleTermAtOneTau) {
  PixelLastTime state({8, 8});
  state.update(Event{4, 4, 0, Polarity::On});
  const Surface s = last_event_surface(Event{4, 4, 1000, Polarity::On}, state, {1, 1000.0, 10});
  EXPECT_NEAR(s.at(0, 0, Polarity::On), 0.3678794, 1e-7);
  EXPECT_EQ(s.channel_sum(Polarity::Off), 0.0);
}

TEST(LastEventSurface, MatchesFullScanOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto stream = testing::random_stream({10, 10, 200, 20, 0}, seed);
    const std::vector<Event> all(stream.begin(), stream.end());
    PixelLastTime state(stream.geometry());
    const SurfaceParams params{2, 80.0, 1};
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (i + 1 == all.size())
        expect_matches(last_event_surface(all[i], state, params), testing::scan_last_event(all, i, 2, 80.0));
      state.update(all[i]);
    }
  }
}

TEST(LocalMemorySurface, EmptyMemoryIsZero) {
  const Surface s = local_memory_surface(Event{1, 1, 10, Polarity::On}, std::span<const Event>{}, {1, 10.0, 100});
  for (double v : s.values()) EXPECT_EQ(v, 0.0);
}

TEST(LocalMemorySurface, TwoTermExponentialSum) {
  const double tau = 500.0;
  const std::vector<Event> memory{{3, 3, 0, Polarity::On}, {3, 3, 500, Polarity::On}};
  const Surface s = local_memory_surface(Event{3, 3, 1000, Polarity::On}, memory, {1, tau, 5000});
  EXPECT_NEAR(s.at(0, 0, Polarity::On), 0.5032147, 1e-7);
  EXPECT_NEAR(s.at(0, 0, Polarity::On), std::exp(-1.0) + std::exp(-2.0), 1e-15);
}

TEST(LocalMemorySurface, WindowIsHalfOpen) {
  const std::vector<Event> memory{{0, 0, 100, Polarity::On},   // exactly delta_t old: in
                                  {0, 0, 99, Polarity::On},    // older: out
                                  {0, 0, 200, Polarity::On}};  // same time: out
  const Surface s = local_memory_surface(Event{0, 0, 200, Polarity::On}, memory, {0, 100.0, 100});
  EXPECT_NEAR(s.at(0, 0, Polarity::On), std::exp(-1.0), 1e-15);
}

TEST(LocalMemorySurface, MemoryUnitAndPlainStoreMatchBruteForce) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto stream = testing::random_stream({16, 16, 500, 30, 0}, seed);
    const SurfaceParams params{2, 300.0, 800};
    MemoryUnit unit(CellBounds{0, 0, 16, 16});
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const Surface reference = brute_force_surface(stream, i, params);
      const Surface via_unit = local_memory_surface(stream[i], unit, params);
      const Surface via_store = local_memory_surface(stream[i], unit.contents(), params);
      for (std::size_t k = 0; k < reference.values().size(); ++k) {
        ASSERT_NEAR(via_unit.values()[k], reference.values()[k], kTol);
        ASSERT_NEAR(via_store.values()[k], reference.values()[k], kTol);
      }
      unit.insert(stream[i], params.delta_t);
    }
  }
}

TEST(BruteForceSurface, FirstEventAndOppositePolarityAreZero) {
  const std::vector<RawEvent> raw{{1, 1, 0, -1}, {1, 1, 5, 1}};
  const auto s = validate_stream(raw, {3, 3});
  for (std::size_t i = 0; i < 2; ++i) {
    const Surface surf = brute_force_surface(s, i, {1, 10.0, 100});
    for (double v : surf.values()) EXPECT_EQ(v, 0.0);
  }
}

TEST(BruteForceSurface, AgreesWithIndependentScan) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto stream = testing::random_stream({12, 9, 300, 15, 7}, seed);
    const std::vector<Event> all(stream.begin(), stream.end());
    const int rho = 1 + int(seed % 3);
    const SurfaceParams params{rho, 120.0, 400};
    for (std::size_t i = 0; i < all.size(); ++i)
      expect_matches(brute_force_surface(stream, i, params), testing::scan_surface(all, i, rho, 120.0, 400));
  }
}

TEST(SurfaceProperties, TimeTranslationInvariance) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = testing::random_stream({10, 10, 200, 20, 0}, seed);
    const auto shifted = transform(s, 0, 0, 1'000'000'007);
    const SurfaceParams params{2, 100.0, 300};
    for (std::size_t i = 0; i < s.size(); i += 7)
      EXPECT_EQ(brute_force_surface(s, i, params), brute_force_surface(shifted, i, params));
  }
}

TEST(SurfaceProperties, MonotoneDecay) {
  double previous = 2.0;
  for (Timestamp age = 1; age < 5000; age += 97) {
    const std::vector<Event> memory{{2, 3, 10'000 - age, Polarity::Off}};
    const double v = local_memory_surface(Event{3, 3, 10'000, Polarity::Off}, memory, {1, 700.0, 10'000})
                         .at(-1, 0, Polarity::Off);
    EXPECT_LT(v, previous);
    previous = v;
  }
}

TEST(SurfaceProperties, CountingLimit) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = testing::random_stream({8, 8, 400, 100, 0}, seed);  // spans <= 4e4 us
    const SurfaceParams params{2, 1e12, 5000};
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Surface surf = brute_force_surface(s, i, params);
      std::map<std::tuple<int, int>, int> counts;
      for (std::size_t j = 0; j < i; ++j)
        if (in_neighbourhood(s[i], s[j], params)) ++counts[{int(s[j].x) - int(s[i].x), int(s[j].y) - int(s[i].y)}];
      for (const auto& [z, c] : counts)
        EXPECT_NEAR(surf.at(std::get<0>(z), std::get<1>(z), s[i].p), c, 1e-6 * c);
      double total = 0.0;
      for (double v : surf.values()) total += v;
      double count_total = 0.0;
      for (const auto& kv : counts) count_total += kv.second;
      EXPECT_NEAR(total, count_total, 1e-6 * std::max(1.0, count_total));
    }
  }
}

TEST(SurfaceProperties, WindowLimitGivesZero) {
  // every positive gap is >= 10 us, and ties are excluded by the window
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto s = testing::random_stream({6, 6, 300, 3, 0}, seed);
    std::vector<Event> ev(s.begin(), s.end());
    for (auto& e : ev) e.t *= 10;
    const auto stream = validate_stream(ev, s.geometry());
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const Surface surf = brute_force_surface(stream, i, {2, 50.0, 9});
      for (double v : surf.values()) ASSERT_EQ(v, 0.0);
    }
  }
}

TEST(SurfaceProperties, PolaritySeparationAndEntryBounds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = testing::random_stream({8, 8, 400, 10, 0}, seed);
    const SurfaceParams params{2, 200.0, 500};
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Surface surf = brute_force_surface(s, i, params);
      EXPECT_EQ(surf.channel_sum(s[i].p == Polarity::On ? Polarity::Off : Polarity::On), 0.0);
      std::map<std::pair<int, int>, int> k;
      for (std::size_t j = 0; j < i; ++j)
        if (in_neighbourhood(s[i], s[j], params)) ++k[{int(s[j].x) - int(s[i].x), int(s[j].y) - int(s[i].y)}];
      for (int zy = -2; zy <= 2; ++zy)
        for (int zx = -2; zx <= 2; ++zx) {
          const double v = surf.at(zx, zy, s[i].p);
          EXPECT_GE(v, 0.0);
          const int bound = k.count({zx, zy}) ? k[{zx, zy}] : 0;
          EXPECT_LE(v, bound);
        }
    }
  }
}

TEST(SurfaceParams, Validation) {
  EXPECT_THROW((SurfaceParams{-1, 1.0, 1}.validate()), Error);
  EXPECT_THROW((SurfaceParams{1, 0.0, 1}.validate()), Error);
  EXPECT_THROW((SurfaceParams{1, 1.0, 0}.validate()), Error);
  EXPECT_NO_THROW((SurfaceParams{0, 1.0, 1}.validate()));
}

}  // namespace
}  // namespace hats
