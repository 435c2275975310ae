#include <gtest/gtest.h>

#include <random>

#include "harvest/geometry.hpp"

using namespace harvest;

TEST(Distance, StationToFieldPoint) {
  EXPECT_DOUBLE_EQ(manhattan_distance(Station{0, {0, 0}}, {10, 20}), 30.0);
  EXPECT_DOUBLE_EQ(manhattan_distance(Station{0, {0, 0}}, {0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(manhattan_distance(Station{0, {5, 0}}, {10, 37.5}), 42.5);
}

TEST(Distance, StationBelowHeadlandEdge) {
  // |dx| + |station.y| + y
  EXPECT_DOUBLE_EQ(manhattan_distance(Station{0, {2, -4}}, {10, 20}), 8 + 4 + 20);
}

TEST(Distance, RejectsNonFinite) {
  EXPECT_THROW(manhattan_distance(Position{0, 0}, Position{NAN, 1}), Error);
  EXPECT_THROW(manhattan_distance(Position{INFINITY, 0}, Position{0, 1}), Error);
}

TEST(TravelTime, SplitsHeadlandAndFurrowLegs) {
  const SpeedProfile p{0.4, 1.2};
  EXPECT_NEAR(travel_time(Station{0, {0, 0}}, {10, 20}, p), 10 / 0.4 + 20 / 1.2, 1e-12);
  EXPECT_NEAR(travel_time(Station{0, {0, 0}}, {10, 20}, p), 41.667, 1e-3);
  EXPECT_DOUBLE_EQ(travel_time(Station{0, {3, 4}}, {3, 4}, p), 0.0);
  EXPECT_DOUBLE_EQ(travel_time(Station{0, {0, 0}}, {10, 20}, SpeedProfile::uniform(1.0)), 30.0);
  // Station 4 m into the headland: 4 + 10 m on the headland.
  EXPECT_NEAR(travel_time(Station{0, {0, -4}}, {10, 20}, p), 14 / 0.4 + 20 / 1.2, 1e-12);
}

TEST(TravelTime, RejectsBadSpeeds) {
  EXPECT_THROW(travel_time(Position{0, 0}, Position{1, 1}, SpeedProfile{0.0, 1.0}), Error);
  EXPECT_THROW(travel_time(Position{0, 0}, Position{1, 1}, SpeedProfile{1.0, -1.0}), Error);
}

TEST(Waypoints, LShape) {
  using P = std::vector<Position>;
  EXPECT_EQ(path_waypoints({0, 0}, {10, 20}), (P{{0, 0}, {10, 0}, {10, 20}}));
  EXPECT_EQ(path_waypoints({10, 20}, {0, 0}), (P{{10, 20}, {10, 0}, {0, 0}}));
  EXPECT_EQ(path_waypoints({3, 0}, {3, 5}), (P{{3, 0}, {3, 5}}));
  EXPECT_EQ(path_waypoints({0, -4}, {10, 20}), (P{{0, -4}, {10, -4}, {10, 20}}));
}

TEST(Field, Invariants) {
  auto f = FieldMap::with_central_station(5, 1.3, 40, 8);
  EXPECT_DOUBLE_EQ(f.furrow_x(3), 3.9);
  EXPECT_DOUBLE_EQ(f.station(0).position.y, -4.0);
  EXPECT_THROW(f.station(7), Error);
  f.stations.push_back({1, {0, 1}});
  EXPECT_THROW(f.validate(), Error);
  f.stations.back() = {0, {0, -1}};
  EXPECT_THROW(f.validate(), Error);
  EXPECT_THROW(FieldMap::with_central_station(0, 1.3, 40, 8), Error);
  EXPECT_THROW(FieldMap::with_central_station(3, 0.0, 40, 8), Error);
}

TEST(GeometryProperty, RandomPoints) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> x(0, 80), y(-6, 40);
  for (int i = 0; i < 2000; ++i) {
    const Position a{x(rng), y(rng)};
    const Position b{x(rng), y(rng)};
    const double d = manhattan_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, manhattan_distance(b, a), 1e-9);
    EXPECT_NEAR(travel_time(a, b, SpeedProfile::uniform(1.0)), d, 1e-9);
    const auto pts = path_waypoints(a, b);
    EXPECT_NEAR(polyline_length(pts), d, 1e-9);
    for (std::size_t k = 1; k < pts.size(); ++k) {
      EXPECT_TRUE(pts[k].x == pts[k - 1].x || pts[k].y == pts[k - 1].y);
    }
  }
  EXPECT_EQ(manhattan_distance(Position{2, 3}, Position{2, 3}), 0.0);
}
