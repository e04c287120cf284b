#pragma once

// Palm geometry: finger-gap annotations, the A/B/C keypoints derived from
// them, the palm-anchored local frame and the square ROI it defines.
//
// All coordinates are image pixels with x to the right and y downward.

#include <array>
#include <cmath>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace palmroi {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2D operator*(double s, Point2D p) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(Point2D, Point2D) = default;
};

inline double dot(Point2D a, Point2D b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2D a, Point2D b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2D p) { return std::hypot(p.x, p.y); }
inline double distance(Point2D a, Point2D b) { return norm(a - b); }
inline Point2D midpoint(Point2D a, Point2D b) { return 0.5 * (a + b); }
inline bool is_finite(Point2D p) { return std::isfinite(p.x) && std::isfinite(p.y); }

enum class Hand { left, right };

std::string_view to_string(Hand hand);

/// Which side of the directed line A->B holds the palm when the thumb-gap
/// point is not annotated. `pos_normal` is the side of (-d.y, d.x) with
/// d = B - A.
enum class PalmSide { pos_normal, neg_normal };

/// Ground-truth finger-gap points of one palm image.
struct PalmAnnotation {
  std::optional<Point2D> thumb_gap;  // P1
  std::array<Point2D, 3> gaps{};     // P2, P3, P4 in anatomical order
  double image_width = 0.0;
  double image_height = 0.0;
  Hand hand = Hand::right;
  std::optional<PalmSide> palm_side;
};

/// Throws DataError when the annotation breaks its invariants.
void validate(const PalmAnnotation& ann);

struct KeypointTriple {
  Point2D a;
  Point2D b;
  Point2D c;
};

/// Palm-anchored coordinate system. `y_axis` points away from the palm
/// centre, `x_axis` is `y_axis` turned 90 degrees clockwise on screen.
struct LocalFrame {
  Point2D origin;
  Point2D x_axis;
  Point2D y_axis;
  double unit = 0.0;  // |AB|

  Point2D to_image(Point2D local) const {
    return origin + (local.x * unit) * x_axis + (local.y * unit) * y_axis;
  }
};

inline constexpr double kRoiSideFactor = 2.5;    // side / |AB|
inline constexpr double kRoiCenterFactor = 1.5;  // |center - O| / |AB|

struct RoiQuad {
  // top-left, top-right, bottom-right, bottom-left as seen in the ROI raster
  std::array<Point2D, 4> corners{};
  double side = 0.0;

  Point2D center() const { return 0.25 * (corners[0] + corners[1] + corners[2] + corners[3]); }
};

enum class BoxClass : int { double_finger_gap = 0, palm_center = 1 };

std::string_view to_string(BoxClass cls);

struct BoxSpec {
  BoxClass class_id = BoxClass::double_finger_gap;
  Point2D center;
  double width = 0.0;
  double height = 0.0;
};

/// Detection box side lengths relative to the annotation geometry.
class BoxSizing {
 public:
  BoxSizing() = default;
  /// Throws std::invalid_argument unless both factors are positive.
  BoxSizing(double alpha, double beta);

  double alpha() const { return alpha_; }  // gap box side / gap pair distance
  double beta() const { return beta_; }    // palm-centre box side / |AB|

 private:
  double alpha_ = 1.5;
  double beta_ = 2.0;
};

KeypointTriple derive_triple(const PalmAnnotation& ann);
LocalFrame frame_from_triple(const KeypointTriple& t);
RoiQuad roi_quad(const LocalFrame& frame);
std::vector<BoxSpec> boxes_from_annotation(const PalmAnnotation& ann, const BoxSizing& sizing = {});

/// 2x3 affine map p' = M [x y 1]^T.
struct Affine2D {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  Point2D apply(Point2D p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }
  Affine2D inverse() const;
  /// this ∘ other (apply `other` first).
  Affine2D compose(const Affine2D& other) const;
};

enum class CanvasPolicy {
  skip,    // reject samples whose points leave the canvas
  expand,  // grow the canvas so the whole rotated square fits
};

struct CanvasTransform {
  Affine2D map;       // source image pixels -> canvas pixels
  double size = 0.0;  // canvas side
};

/// Letterbox a width x height image onto an out_size square canvas
/// (uniform scale, centred) and rotate it by `theta_deg` about the canvas
/// centre. Positive angles turn counter-clockwise on screen.
CanvasTransform augmentation_transform(double width, double height, double theta_deg,
                                       double out_size, CanvasPolicy policy = CanvasPolicy::skip);

/// Moves annotation points through augmentation_transform. Throws
/// PointOutOfCanvas under CanvasPolicy::skip when a point leaves the canvas.
PalmAnnotation rotate_annotation(const PalmAnnotation& ann, double theta_deg, double out_size,
                                 CanvasPolicy policy = CanvasPolicy::skip);

}  // namespace palmroi
