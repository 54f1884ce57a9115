#pragma once

#include <string>

namespace dskd::geo {

inline constexpr double kEarthRadiusM = 6371000.0;

struct RadarImageSpec {
  double X = 0.0;  ///< pixel width (azimuth axis)
  double Y = 0.0;  ///< pixel height (range axis)
  double R = 0.0;  ///< radar range, metres
  void validate() const;
};

/// Pixel box, top-left origin.
struct BoundingBox {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
};

struct LatLon {
  double lat = 0.0;  ///< degrees, [-90, 90]
  double lon = 0.0;  ///< degrees, (-180, 180]
  void validate() const;
};

struct OpticsConfig {
  double B = 0.0;             ///< optics zero direction relative to north, degrees
  double L = 0.0;             ///< optics mounting height, metres
  double I = 0.0;             ///< CCD length, metres
  double f_min = 0.0;         ///< minimum focal length, metres
  double beam_width_b = 0.0;  ///< radar beam width, degrees
  void validate() const;
};

struct RelativePosition {
  double A = 0.0;  ///< azimuth, degrees in [0, 360)
  double D = 0.0;  ///< distance, metres
};

enum class WidthMode { tan, literal };
std::string to_string(WidthMode m);
WidthMode width_mode_from_string(const std::string& s);

/// Every intermediate of the pointing chain.
struct PointingSolution {
  RelativePosition radar_rel;   ///< (A1, D1)
  LatLon target;                ///< P2
  RelativePosition optics_rel;  ///< (A2, D2)
  double P = 0.0;
  double T = 0.0;
  double W = 0.0;
  double Z = 0.0;
};

/// Wraps degrees into [0, 360).
double wrap360(double deg);

/// A1 from the horizontal box centre, D1 from the vertical box centre y + h/2,
/// measured up from the bottom edge (range zero).
RelativePosition box_to_radar_relative(const BoundingBox& box, const RadarImageSpec& spec);

/// Great-circle destination point on the spherical earth.
LatLon forward_position(const LatLon& origin, const RelativePosition& rel);

/// Initial bearing and great-circle (haversine) distance. Coincident points give A = 0.
RelativePosition inverse_position(const LatLon& from, const LatLon& to);

struct PanTilt {
  double P = 0.0;
  double T = 0.0;
};
/// P = (A + B) mod 360, T = atan(L / D) in degrees.
PanTilt pan_tilt(const RelativePosition& rel, const OpticsConfig& cfg);

/// Angular extent α = 180·w/X − b degrees. tan mode: W = 2·D·tan(α). literal mode:
/// W = 2·D·atan(α) with α as a bare number, reproducing the printed formula.
double target_width(const BoundingBox& box, const RadarImageSpec& spec, const OpticsConfig& cfg,
                    const RelativePosition& rel, WidthMode mode = WidthMode::tan);

/// Z = D·I / (2·W·f_min): the target fills half of the frame.
double zoom(const RelativePosition& rel, const OpticsConfig& cfg, double W);

/// box → (A1, D1) → P2 → (A2, D2) → (P, T), and W → Z. Errors carry the stage name.
PointingSolution solve_pointing(const BoundingBox& box, const RadarImageSpec& spec,
                                const LatLon& radar, const LatLon& optics, const OpticsConfig& cfg,
                                WidthMode mode = WidthMode::tan);

}  // namespace dskd::geo
