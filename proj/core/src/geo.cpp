#include "dskd/geo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace dskd::geo {
namespace {

constexpr double kPi = std::numbers::pi;
double rad(double deg) { return deg * kPi / 180.0; }
double deg(double rad) { return rad * 180.0 / kPi; }

double wrap_lon(double lon) {
  double l = std::fmod(lon + 180.0, 360.0);
  if (l < 0.0) l += 360.0;
  l -= 180.0;
  return l == -180.0 ? 180.0 : l;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void RadarImageSpec::validate() const {
  if (!(X > 0.0 && Y > 0.0 && R > 0.0)) {
    throw std::invalid_argument("radar image spec: X, Y and R must be positive");
  }
}

void LatLon::validate() const {
  if (!(lat >= -90.0 && lat <= 90.0)) throw std::invalid_argument("latitude " + fmt(lat) + " outside [-90, 90]");
  if (!(lon > -180.0 && lon <= 180.0)) throw std::invalid_argument("longitude " + fmt(lon) + " outside (-180, 180]");
}

void OpticsConfig::validate() const {
  if (!(L > 0.0)) throw std::invalid_argument("optics: height L must be positive");
  if (!(I > 0.0)) throw std::invalid_argument("optics: CCD length I must be positive");
  if (!(f_min > 0.0)) throw std::invalid_argument("optics: f_min must be positive");
}

std::string to_string(WidthMode m) { return m == WidthMode::tan ? "tan" : "literal"; }

WidthMode width_mode_from_string(const std::string& s) {
  if (s == "tan") return WidthMode::tan;
  if (s == "literal") return WidthMode::literal;
  throw std::invalid_argument("unknown width mode '" + s + "' (expected tan or literal)");
}

double wrap360(double d) {
  double w = std::fmod(d, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

RelativePosition box_to_radar_relative(const BoundingBox& b, const RadarImageSpec& spec) {
  spec.validate();
  if (!(b.w >= 0.0 && b.h >= 0.0)) throw std::invalid_argument("box: negative width or height");
  if (!(b.x >= 0.0 && b.y >= 0.0 && b.x + b.w <= spec.X && b.y + b.h <= spec.Y)) {
    throw std::invalid_argument("box (" + fmt(b.x) + "," + fmt(b.y) + "," + fmt(b.w) + "," + fmt(b.h) +
                                ") lies outside the " + fmt(spec.X) + "x" + fmt(spec.Y) + " image");
  }
  RelativePosition r;
  r.A = wrap360((b.x + b.w / 2.0) / spec.X * 360.0);
  r.D = std::clamp((spec.Y - (b.y + b.h / 2.0)) / spec.Y * spec.R, 0.0, spec.R);
  return r;
}

LatLon forward_position(const LatLon& o, const RelativePosition& rel) {
  if (!(rel.D >= 0.0)) throw std::invalid_argument("forward_position: negative distance");
  const double p1 = rad(o.lat), l1 = rad(o.lon), th = rad(wrap360(rel.A));
  const double delta = rel.D / kEarthRadiusM;
  const double sp2 = std::sin(p1) * std::cos(delta) + std::cos(p1) * std::sin(delta) * std::cos(th);
  const double p2 = std::asin(std::clamp(sp2, -1.0, 1.0));
  const double l2 = l1 + std::atan2(std::sin(th) * std::sin(delta) * std::cos(p1),
                                    std::cos(delta) - std::sin(p1) * std::sin(p2));
  return {deg(p2), wrap_lon(deg(l2))};
}

RelativePosition inverse_position(const LatLon& a, const LatLon& b) {
  const double p1 = rad(a.lat), p2 = rad(b.lat);
  const double dp = p2 - p1, dl = rad(b.lon - a.lon);
  const double h = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  RelativePosition r;
  r.D = 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
  if (r.D == 0.0) return r;
  const double y = std::sin(dl) * std::cos(p2);
  const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
  r.A = wrap360(deg(std::atan2(y, x)));
  return r;
}

PanTilt pan_tilt(const RelativePosition& rel, const OpticsConfig& cfg) {
  if (!(rel.D > 0.0)) throw std::invalid_argument("pan_tilt: tilt undefined at zero distance");
  if (!(cfg.L > 0.0)) throw std::invalid_argument("pan_tilt: height L must be positive");
  return {wrap360(rel.A + cfg.B), deg(std::atan(cfg.L / rel.D))};
}

double target_width(const BoundingBox& box, const RadarImageSpec& spec, const OpticsConfig& cfg,
                    const RelativePosition& rel, WidthMode mode) {
  spec.validate();
  if (!(rel.D > 0.0)) throw std::invalid_argument("target_width: distance must be positive");
  const double alpha = 180.0 * box.w / spec.X - cfg.beam_width_b;
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("target_width: non-positive angular extent " + fmt(alpha) +
                                " deg (box too narrow for beam width)");
  }
  if (mode == WidthMode::literal) return 2.0 * rel.D * std::atan(alpha);
  if (!(alpha < 90.0)) throw std::invalid_argument("target_width: angular extent " + fmt(alpha) + " deg >= 90");
  return 2.0 * rel.D * std::tan(rad(alpha));
}

double zoom(const RelativePosition& rel, const OpticsConfig& cfg, double W) {
  if (!(W > 0.0)) throw std::invalid_argument("zoom: target width must be positive");
  if (!(cfg.f_min > 0.0)) throw std::invalid_argument("zoom: f_min must be positive");
  return rel.D * cfg.I / (2.0 * W * cfg.f_min);
}

PointingSolution solve_pointing(const BoundingBox& box, const RadarImageSpec& spec,
                                const LatLon& radar, const LatLon& optics, const OpticsConfig& cfg,
                                WidthMode mode) {
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("stage ") + name + ": " + e.what());
    }
  };
  stage("input", [&] {
    radar.validate();
    optics.validate();
    cfg.validate();
    return 0;
  });
  PointingSolution s;
  s.radar_rel = stage("box_to_radar_relative", [&] { return box_to_radar_relative(box, spec); });
  s.target = stage("forward_position", [&] { return forward_position(radar, s.radar_rel); });
  s.optics_rel = stage("inverse_position", [&] { return inverse_position(optics, s.target); });
  const PanTilt pt = stage("pan_tilt", [&] { return pan_tilt(s.optics_rel, cfg); });
  s.P = pt.P;
  s.T = pt.T;
  s.W = stage("target_width", [&] { return target_width(box, spec, cfg, s.optics_rel, mode); });
  s.Z = stage("zoom", [&] { return zoom(s.optics_rel, cfg, s.W); });
  return s;
}

}  // namespace dskd::geo
