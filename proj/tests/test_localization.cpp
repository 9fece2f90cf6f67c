#include <cmath>

#include <gtest/gtest.h>

#include "dgw/localization.hpp"

using namespace dgw;

namespace {

StationTable four_stations() {
  return StationTable({{"A", {45.0, 7.0}}, {"B", {45.0, 8.0}}, {"C", {46.0, 7.0}}, {"D", {10.0, -20.0}}});
}

}  // namespace

TEST(SphericalMean, SinglePointAndMidpoint) {
  const GeoPoint p{12.3, -45.6};
  const GeoPoint one = spherical_mean(std::vector<GeoPoint>{p}, std::vector<double>{1.0});
  EXPECT_NEAR(one.lat, p.lat, 1e-12);
  EXPECT_NEAR(one.lon, p.lon, 1e-12);

  // Two equatorial points: the midpoint stays on the equator.
  const GeoPoint mid = spherical_mean(std::vector<GeoPoint>{{0, 10}, {0, 30}}, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(mid.lat, 0.0, 1e-12);
  EXPECT_NEAR(mid.lon, 20.0, 1e-12);

  // Same meridian: (45 + 55) / 2.
  const GeoPoint mer = spherical_mean(std::vector<GeoPoint>{{45, 7}, {55, 7}}, std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(mer.lat, 50.0, 1e-12);
  EXPECT_NEAR(mer.lon, 7.0, 1e-12);
}

TEST(SphericalMean, Errors) {
  EXPECT_THROW(spherical_mean(std::vector<GeoPoint>{}, std::vector<double>{}), ParameterError);
  EXPECT_THROW(spherical_mean(std::vector<GeoPoint>{{0, 0}, {0, 180}}, std::vector<double>{1.0, 1.0}), NumericError);
}

TEST(EstimateEpicenter, SingleCoefficientIsStationExactly) {
  CoefficientTensor c(2, 4, 6);
  c(1, 2, 3) = -0.7;
  const std::vector<double> scales{0.5, 1.5};
  const EventEstimate e = estimate_epicenter(c, four_stations(), 0.5, scales);
  EXPECT_EQ(e.position.lat, 46.0);
  EXPECT_EQ(e.position.lon, 7.0);
  EXPECT_EQ(e.dominant_vertex, 2u);
  EXPECT_EQ(e.onset_tau, 3u);
  EXPECT_EQ(e.dominant_scale_index, 1u);
  EXPECT_EQ(e.dominant_scale, 1.5);
  EXPECT_EQ(e.amplitude, -0.7);
  ASSERT_EQ(e.contributors.size(), 1u);
  EXPECT_EQ(e.contributors[0].weight, 1.0);
  EXPECT_EQ(localization_error_km(e, {46.0, 7.0}), 0.0);
}

TEST(EstimateEpicenter, EqualPairGivesMidpoint) {
  CoefficientTensor c(1, 4, 4);
  c(0, 0, 1) = 1.0;
  c(0, 1, 2) = -1.0;
  const EventEstimate e = estimate_epicenter(c, four_stations());
  const GeoPoint mid = spherical_mean(std::vector<GeoPoint>{{45, 7}, {45, 8}}, std::vector<double>{1, 1});
  EXPECT_NEAR(e.position.lat, mid.lat, 1e-12);
  EXPECT_NEAR(e.position.lon, mid.lon, 1e-12);
  EXPECT_NEAR(e.position.lon, 7.5, 1e-12);
  // On a great circle the midpoint bulges poleward of the parallel.
  EXPECT_GT(e.position.lat, 45.0);
  // Tie on energy goes to the lowest vertex.
  EXPECT_EQ(e.dominant_vertex, 0u);
  EXPECT_EQ(e.onset_tau, 1u);
  EXPECT_NEAR(haversine_km(e.position, {45, 7}), haversine_km(e.position, {45, 8}), 1e-9);
}

TEST(EstimateEpicenter, ThresholdSelectsContributors) {
  CoefficientTensor c(1, 4, 4);
  c(0, 0, 0) = 1.0;
  c(0, 1, 0) = 0.8;  // energy 0.64
  c(0, 2, 0) = 0.6;  // energy 0.36
  const auto st = four_stations();
  EXPECT_EQ(estimate_epicenter(c, st, 0.5).contributors.size(), 2u);
  EXPECT_EQ(estimate_epicenter(c, st, 0.3).contributors.size(), 3u);
  const EventEstimate top = estimate_epicenter(c, st, 1.0);
  ASSERT_EQ(top.contributors.size(), 1u);
  EXPECT_EQ(top.position.lat, 45.0);
  const EventEstimate two = estimate_epicenter(c, st, 0.5);
  EXPECT_NEAR(two.contributors[0].weight, 1.0 / 1.64, 1e-15);
  EXPECT_NEAR(two.contributors[1].weight, 0.64 / 1.64, 1e-15);
}

TEST(EstimateEpicenter, InvariantToCoefficientScaling) {
  CoefficientTensor c(2, 4, 5);
  c(0, 0, 1) = 0.9;
  c(1, 1, 2) = -1.0;
  c(0, 2, 4) = 0.75;
  const auto st = four_stations();
  const EventEstimate a = estimate_epicenter(c, st);
  c.matrix() *= -37.0;
  const EventEstimate b = estimate_epicenter(c, st);
  EXPECT_NEAR(a.position.lat, b.position.lat, 1e-12);
  EXPECT_NEAR(a.position.lon, b.position.lon, 1e-12);
  EXPECT_EQ(a.dominant_vertex, b.dominant_vertex);
}

TEST(EstimateEpicenter, DominantTieBreakOrder) {
  CoefficientTensor c(2, 4, 4);
  c(1, 2, 0) = 1.0;
  c(0, 2, 1) = 1.0;
  c(1, 3, 0) = -1.0;
  const EventEstimate e = estimate_epicenter(c, four_stations(), 1.0);
  EXPECT_EQ(e.dominant_vertex, 2u);
  EXPECT_EQ(e.onset_tau, 0u);
  EXPECT_EQ(e.dominant_scale_index, 1u);
}

TEST(EstimateEpicenter, Errors) {
  const auto st = four_stations();
  EXPECT_THROW(estimate_epicenter(CoefficientTensor(1, 4, 4), st), NoEventError);
  CoefficientTensor c(1, 4, 4);
  c(0, 0, 0) = 1.0;
  EXPECT_THROW(estimate_epicenter(c, st, 0.0), ParameterError);
  EXPECT_THROW(estimate_epicenter(c, st, 1.5), ParameterError);
  EXPECT_THROW(estimate_epicenter(CoefficientTensor(1, 3, 4), st), ParameterError);
  EXPECT_THROW(estimate_epicenter(c, st, 0.5, std::vector<double>{1.0, 2.0}), ParameterError);
  try {
    estimate_epicenter(CoefficientTensor(1, 4, 4), st);
  } catch (const NoEventError& e) {
    EXPECT_STREQ(e.what(), "no event detected");
  }
}

TEST(LocalizationError, Symmetric) {
  EventEstimate e;
  e.position = {45.2, 7.3};
  const GeoPoint t{45.9, 7.1};
  EventEstimate back;
  back.position = t;
  EXPECT_EQ(localization_error_km(e, t), localization_error_km(back, e.position));
  EXPECT_GT(localization_error_km(e, t), 0.0);
}

TEST(MeanNearestNeighbor, HandValue) {
  // Three collinear equatorial stations at 0, 1, 3 degrees of longitude.
  const StationTable st({{"a", {0, 0}}, {"b", {0, 1}}, {"c", {0, 3}}});
  const double one = haversine_km({0, 0}, {0, 1});
  EXPECT_NEAR(mean_nearest_neighbor_km(st), (one + one + 2 * one) / 3.0, 1e-9);
}
