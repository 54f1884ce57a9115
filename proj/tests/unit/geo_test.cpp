#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "dskd/geo.hpp"
#include "dskd/numerics.hpp"
#include "testing.hpp"

using namespace dskd::geo;
using dskd::support::num;
using dskd::support::oracle;
using dskd::support::oracle_value;

namespace {

constexpr double kAngleTol = 1e-4;

double angle_diff(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

void expect_rel(double got, double want, double tol) {
  EXPECT_LE(std::abs(got - want), tol * std::max(1.0, std::abs(want))) << got << " vs " << want;
}

const RadarImageSpec kImage{4096, 4096, 10000};
const LatLon kRadar{18.25, 109.50};
const OpticsConfig kOptics{0.0, 20.0, 0.0088, 0.01, 0.2};
const BoundingBox kBox{2048, 1024, 10, 10};

}  // namespace

TEST(BoxToRadar, CentredBoxPointsSouth) {
  const auto r = box_to_radar_relative({2048 - 5, 0, 10, 10}, kImage);
  EXPECT_DOUBLE_EQ(r.A, 180.0);
}

TEST(BoxToRadar, MidHeightIsHalfRange) {
  const auto r = box_to_radar_relative({0, 2048 - 5, 10, 10}, kImage);
  EXPECT_DOUBLE_EQ(r.D, 5000.0);
}

TEST(BoxToRadar, HandEvaluated) {
  const auto r = box_to_radar_relative({1024, 4096, 0, 0}, kImage);
  EXPECT_DOUBLE_EQ(r.A, 90.0);
  EXPECT_DOUBLE_EQ(r.D, 0.0);
}

TEST(BoxToRadar, OutsideImageIsRejected) {
  EXPECT_THROW(box_to_radar_relative({4000, 0, 200, 10}, kImage), std::invalid_argument);
  EXPECT_THROW(box_to_radar_relative({-1, 0, 2, 2}, kImage), std::invalid_argument);
  EXPECT_THROW(box_to_radar_relative({0, 0, -2, 2}, kImage), std::invalid_argument);
}

TEST(ForwardPosition, ZeroDistanceIsOrigin) {
  const auto p = forward_position(kRadar, {123.0, 0.0});
  EXPECT_DOUBLE_EQ(p.lat, kRadar.lat);
  EXPECT_DOUBLE_EQ(p.lon, kRadar.lon);
}

TEST(ForwardPosition, OneDegreeNorth) {
  const auto& want = oracle().at("forward_north_one_degree");
  const auto p = forward_position({0, 0}, {0.0, 111194.9});
  EXPECT_NEAR(p.lat, num(want[0]), 1e-9);
  EXPECT_NEAR(p.lat, 1.0, kAngleTol);
  EXPECT_NEAR(p.lon, 0.0, 1e-12);
}

TEST(ForwardPosition, BearingWrapsModulo360) {
  const auto a = forward_position(kRadar, {37.0, 4200.0});
  const auto b = forward_position(kRadar, {397.0, 4200.0});
  EXPECT_NEAR(a.lat, b.lat, 1e-12);
  EXPECT_NEAR(a.lon, b.lon, 1e-12);
}

TEST(InversePosition, CoincidentPointsGiveZero) {
  const auto r = inverse_position(kRadar, kRadar);
  EXPECT_EQ(r.D, 0.0);
  EXPECT_EQ(r.A, 0.0);
}

TEST(InversePosition, EquatorialDegree) {
  const auto& want = oracle().at("inverse_0_0_to_0_1");
  const auto r = inverse_position({0, 0}, {0, 1});
  EXPECT_NEAR(r.A, num(want[0]), 1e-9);
  expect_rel(r.D, num(want[1]), 1e-9);
  expect_rel(r.D, oracle_value("equator_one_degree_m"), 1e-12);
}

TEST(InversePosition, RoundTripThousandRandomCases) {
  dskd::SeededRng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const LatLon o{-80.0 + 160.0 * rng.uniform(), -180.0 + 360.0 * rng.uniform()};
    const RelativePosition rel{360.0 * rng.uniform(), 1.0 + 99999.0 * rng.uniform()};
    const auto back = inverse_position(o, forward_position(o, rel));
    ASSERT_LE(std::abs(back.D - rel.D) / rel.D, 1e-6) << "case " << i;
    ASSERT_LE(angle_diff(back.A, rel.A), kAngleTol) << "case " << i;
    ASSERT_GE(back.A, 0.0);
    ASSERT_LT(back.A, 360.0);
  }
}

TEST(InversePosition, CrossesTheAntimeridian) {
  const auto p = forward_position({10.0, 179.99}, {90.0, 5000.0});
  EXPECT_LE(p.lon, 180.0);
  EXPECT_GT(p.lon, -180.0);
  const auto r = inverse_position({10.0, 179.99}, p);
  EXPECT_NEAR(r.D, 5000.0, 5000.0 * 1e-9);
}

TEST(PanTilt, Examples) {
  OpticsConfig cfg = kOptics;
  cfg.L = 50.0;
  EXPECT_NEAR(pan_tilt({10.0, 50.0}, cfg).T, 45.0, 1e-12);
  cfg.B = 20.0;
  EXPECT_NEAR(pan_tilt({350.0, 100.0}, cfg).P, 10.0, 1e-12);
  cfg.L = 10.0;
  EXPECT_NEAR(pan_tilt({0.0, 1e9}, cfg).T, 0.0, 1e-6);
  EXPECT_THROW(pan_tilt({0.0, 0.0}, cfg), std::invalid_argument);
}

TEST(PanTilt, OutputRanges) {
  dskd::SeededRng rng(4);
  for (int i = 0; i < 200; ++i) {
    OpticsConfig cfg = kOptics;
    cfg.B = 720.0 * rng.uniform() - 360.0;
    cfg.L = 0.1 + 100.0 * rng.uniform();
    const auto pt = pan_tilt({360.0 * rng.uniform(), 1.0 + 1e5 * rng.uniform()}, cfg);
    ASSERT_GE(pt.P, 0.0);
    ASSERT_LT(pt.P, 360.0);
    ASSERT_GT(pt.T, 0.0);
    ASSERT_LT(pt.T, 90.0);
  }
}

TEST(TargetWidth, OneDegreeTan) {
  OpticsConfig cfg = kOptics;
  cfg.beam_width_b = 0.0;
  const double w = target_width({0, 0, 1, 1}, {180, 180, 1000}, cfg, {0.0, 1000.0}, WidthMode::tan);
  EXPECT_NEAR(w, oracle_value("width_tan_1deg"), 1e-9);
}

TEST(TargetWidth, VanishesAsAngleShrinks) {
  OpticsConfig cfg = kOptics;
  cfg.beam_width_b = 0.0;
  for (auto mode : {WidthMode::tan, WidthMode::literal}) {
    double prev = 1e300;
    for (double w : {1.0, 1e-2, 1e-4, 1e-6}) {
      const double width = target_width({0, 0, w, 1}, {180, 180, 1000}, cfg, {0.0, 1000.0}, mode);
      EXPECT_GT(width, 0.0);
      EXPECT_LT(width, prev);
      prev = width;
    }
    EXPECT_LT(prev, 1e-2);
  }
}

TEST(TargetWidth, SmallAnglesAgreeWithRadianLiteral) {
  // Literal atan(α) with α first converted to radians tracks tan(α) below 2°.
  OpticsConfig cfg = kOptics;
  cfg.beam_width_b = 0.0;
  for (double deg : {0.25, 0.5, 1.0, 2.0}) {
    const double w = target_width({0, 0, deg, 1}, {180, 180, 1000}, cfg, {0.0, 1000.0}, WidthMode::tan);
    const double lit = 2.0 * 1000.0 * std::atan(deg * M_PI / 180.0);
    EXPECT_LE(std::abs(w - lit) / w, 0.01) << deg;
  }
}

TEST(TargetWidth, NonPositiveExtentIsRejected) {
  OpticsConfig cfg = kOptics;
  cfg.beam_width_b = 1.0;
  EXPECT_THROW(target_width({0, 0, 1, 1}, {180, 180, 1000}, cfg, {0.0, 1000.0}), std::invalid_argument);
  EXPECT_THROW(target_width({0, 0, 1, 1}, {360, 180, 1000}, cfg, {0.0, 1000.0}), std::invalid_argument);
}

TEST(Zoom, Examples) {
  OpticsConfig cfg = kOptics;
  cfg.I = 0.01;
  cfg.f_min = 0.1;
  EXPECT_NEAR(zoom({0.0, 2000.0}, cfg, 10.0), 10.0, 1e-12);
  EXPECT_NEAR(zoom({0.0, 2000.0}, cfg, 20.0), 5.0, 1e-12);
  EXPECT_NEAR(zoom({0.0, 4000.0}, cfg, 20.0), 10.0, 1e-12);
  EXPECT_THROW(zoom({0.0, 2000.0}, cfg, 0.0), std::invalid_argument);
  cfg.f_min = 0.0;
  EXPECT_THROW(zoom({0.0, 2000.0}, cfg, 10.0), std::invalid_argument);
}

TEST(SolvePointing, MatchesStageByStageFixture) {
  const auto& f = oracle().at("geo_fixture");
  const LatLon optics = forward_position(kRadar, {90.0, 500.0});
  EXPECT_NEAR(optics.lat, num(f["optics_lat"]), 1e-9);
  EXPECT_NEAR(optics.lon, num(f["optics_lon"]), 1e-9);
  const auto s = solve_pointing(kBox, kImage, kRadar, optics, kOptics);
  EXPECT_NEAR(s.radar_rel.A, num(f["A1"]), 1e-9);
  expect_rel(s.radar_rel.D, num(f["D1"]), 1e-12);
  EXPECT_NEAR(s.target.lat, num(f["target_lat"]), kAngleTol * 1e-3);
  EXPECT_NEAR(s.target.lon, num(f["target_lon"]), kAngleTol * 1e-3);
  EXPECT_NEAR(s.optics_rel.A, num(f["A2"]), kAngleTol);
  expect_rel(s.optics_rel.D, num(f["D2"]), 1e-6);
  EXPECT_NEAR(s.P, num(f["P"]), kAngleTol);
  EXPECT_NEAR(s.T, num(f["T"]), kAngleTol);
  expect_rel(s.W, num(f["W"]), 1e-6);
  expect_rel(s.Z, num(f["Z"]), 1e-6);
  const auto lit = solve_pointing(kBox, kImage, kRadar, optics, kOptics, WidthMode::literal);
  expect_rel(lit.W, num(f["W_literal"]), 1e-6);
}

TEST(SolvePointing, CoLocatedOpticsReproduceRadarGeometry) {
  const auto s = solve_pointing(kBox, kImage, kRadar, kRadar, kOptics);
  EXPECT_LE(angle_diff(s.optics_rel.A, s.radar_rel.A), kAngleTol);
  EXPECT_LE(std::abs(s.optics_rel.D - s.radar_rel.D) / s.radar_rel.D, 1e-6);
}

TEST(SolvePointing, EqualsManualComposition) {
  const LatLon optics{18.26, 109.49};
  const auto s = solve_pointing(kBox, kImage, kRadar, optics, kOptics);
  const auto rel1 = box_to_radar_relative(kBox, kImage);
  const auto target = forward_position(kRadar, rel1);
  const auto rel2 = inverse_position(optics, target);
  const auto pt = pan_tilt(rel2, kOptics);
  const double w = target_width(kBox, kImage, kOptics, rel2);
  EXPECT_EQ(s.radar_rel.A, rel1.A);
  EXPECT_EQ(s.target.lat, target.lat);
  EXPECT_EQ(s.optics_rel.D, rel2.D);
  EXPECT_EQ(s.P, pt.P);
  EXPECT_EQ(s.T, pt.T);
  EXPECT_EQ(s.W, w);
  EXPECT_EQ(s.Z, zoom(rel2, kOptics, w));
}

TEST(SolvePointing, DeterministicBytes) {
  const auto a = solve_pointing(kBox, kImage, kRadar, {18.26, 109.49}, kOptics);
  const auto b = solve_pointing(kBox, kImage, kRadar, {18.26, 109.49}, kOptics);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(SolvePointing, ErrorsNameTheStage) {
  try {
    solve_pointing({5000, 0, 1, 1}, kImage, kRadar, kRadar, kOptics);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("stage"), std::string::npos) << e.what();
  }
  // Optics exactly on the target: zero distance, tilt undefined.
  const auto target = forward_position(kRadar, box_to_radar_relative(kBox, kImage));
  EXPECT_THROW(solve_pointing(kBox, kImage, kRadar, target, kOptics), std::invalid_argument);
}

TEST(Wrap360, Range) {
  EXPECT_EQ(wrap360(360.0), 0.0);
  EXPECT_EQ(wrap360(-10.0), 350.0);
  EXPECT_EQ(wrap360(725.0), 5.0);
  EXPECT_GE(wrap360(-1e-18), 0.0);
  EXPECT_LT(wrap360(-1e-18), 360.0);
}
