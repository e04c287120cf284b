#include "palmroi/geometry.hpp"

#include <stdexcept>
#include <string>

#include "palmroi/errors.hpp"

namespace palmroi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Relative tolerance below which C is treated as lying on the AB line.
constexpr double kCollinearEps = 1e-12;

Point2D unit_normal(Point2D a, Point2D b) {
  const Point2D d = b - a;
  const double len = norm(d);
  return {-d.y / len, d.x / len};
}

// cos/sin in degrees, exact on multiples of 90.
std::pair<double, double> cos_sin_deg(double theta_deg) {
  double t = std::fmod(theta_deg, 360.0);
  if (t < 0.0) t += 360.0;
  if (t == 0.0) return {1.0, 0.0};
  if (t == 90.0) return {0.0, 1.0};
  if (t == 180.0) return {-1.0, 0.0};
  if (t == 270.0) return {0.0, -1.0};
  const double rad = t * kPi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

}  // namespace

std::string_view to_string(Hand hand) { return hand == Hand::left ? "left" : "right"; }

std::string_view to_string(BoxClass cls) {
  return cls == BoxClass::double_finger_gap ? "double_finger_gap" : "palm_center";
}

void validate(const PalmAnnotation& ann) {
  if (!(ann.image_width > 0.0) || !(ann.image_height > 0.0)) {
    throw DataError("annotation image size must be positive");
  }
  auto inside = [&](Point2D p) {
    return is_finite(p) && p.x >= 0.0 && p.x <= ann.image_width && p.y >= 0.0 &&
           p.y <= ann.image_height;
  };
  for (std::size_t i = 0; i < ann.gaps.size(); ++i) {
    if (!inside(ann.gaps[i])) {
      throw DataError("finger-gap point P" + std::to_string(i + 2) + " lies outside the image");
    }
  }
  if (ann.thumb_gap && !inside(*ann.thumb_gap)) {
    throw DataError("thumb-gap point P1 lies outside the image");
  }
  const auto& g = ann.gaps;
  if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) {
    throw DegenerateAnnotation("finger-gap points P2, P3, P4 must be pairwise distinct");
  }
}

BoxSizing::BoxSizing(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("box sizing factors must be positive and finite");
  }
}

KeypointTriple derive_triple(const PalmAnnotation& ann) {
  const auto& g = ann.gaps;
  for (const auto& p : g) {
    if (!is_finite(p)) throw DegenerateAnnotation("non-finite finger-gap point");
  }
  if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) {
    throw DegenerateAnnotation("finger-gap points P2, P3, P4 must be pairwise distinct");
  }
  const Point2D a = midpoint(g[0], g[1]);
  const Point2D b = midpoint(g[1], g[2]);
  const double u = distance(a, b);
  if (!(u > 0.0)) throw DegenerateAnnotation("keypoints A and B coincide");

  const Point2D o = midpoint(a, b);
  const Point2D n = unit_normal(a, b);

  double sign = 0.0;
  if (ann.thumb_gap && is_finite(*ann.thumb_gap)) {
    const Point2D to_thumb = *ann.thumb_gap - o;
    const double side = dot(n, to_thumb);
    if (std::abs(side) > kCollinearEps * norm(to_thumb)) sign = side > 0.0 ? 1.0 : -1.0;
  }
  if (sign == 0.0 && ann.palm_side) {
    sign = *ann.palm_side == PalmSide::pos_normal ? 1.0 : -1.0;
  }
  if (sign == 0.0) {
    throw DegenerateAnnotation("palm side undeterminable: no usable thumb-gap point or palm_side flag");
  }
  return {a, b, o + (sign * kRoiCenterFactor * u) * n};
}

LocalFrame frame_from_triple(const KeypointTriple& t) {
  if (!is_finite(t.a) || !is_finite(t.b) || !is_finite(t.c)) {
    throw DegenerateTriple("non-finite keypoint");
  }
  const double u = distance(t.a, t.b);
  if (!(u > 0.0)) throw DegenerateTriple("keypoints A and B coincide");

  const Point2D o = midpoint(t.a, t.b);
  const Point2D n = unit_normal(t.a, t.b);
  const Point2D to_c = t.c - o;
  const double side = dot(n, to_c);
  if (!(std::abs(side) > kCollinearEps * norm(to_c))) {
    throw DegenerateTriple("keypoint C lies on the AB line");
  }
  const Point2D y_axis = side < 0.0 ? n : -1.0 * n;
  return {o, {-y_axis.y, y_axis.x}, y_axis, u};
}

RoiQuad roi_quad(const LocalFrame& f) {
  const double half = 0.5 * kRoiSideFactor * f.unit;
  const Point2D center = f.origin - (kRoiCenterFactor * f.unit) * f.y_axis;
  const Point2D hx = half * f.x_axis;
  const Point2D hy = half * f.y_axis;
  RoiQuad q;
  q.corners = {center - hx + hy, center + hx + hy, center + hx - hy, center - hx - hy};
  q.side = kRoiSideFactor * f.unit;
  return q;
}

std::vector<BoxSpec> boxes_from_annotation(const PalmAnnotation& ann, const BoxSizing& sizing) {
  const KeypointTriple t = derive_triple(ann);
  const double gap_ab = sizing.alpha() * distance(ann.gaps[0], ann.gaps[1]);
  const double gap_bc = sizing.alpha() * distance(ann.gaps[1], ann.gaps[2]);
  const double palm = sizing.beta() * distance(t.a, t.b);
  return {
      {BoxClass::double_finger_gap, t.a, gap_ab, gap_ab},
      {BoxClass::double_finger_gap, t.b, gap_bc, gap_bc},
      {BoxClass::palm_center, t.c, palm, palm},
  };
}

Affine2D Affine2D::inverse() const {
  const double det = m[0] * m[4] - m[1] * m[3];
  if (det == 0.0) throw std::domain_error("singular affine map");
  const double a = m[4] / det, b = -m[1] / det;
  const double c = -m[3] / det, d = m[0] / det;
  return {{a, b, -(a * m[2] + b * m[5]), c, d, -(c * m[2] + d * m[5])}};
}

Affine2D Affine2D::compose(const Affine2D& o) const {
  return {{
      m[0] * o.m[0] + m[1] * o.m[3],
      m[0] * o.m[1] + m[1] * o.m[4],
      m[0] * o.m[2] + m[1] * o.m[5] + m[2],
      m[3] * o.m[0] + m[4] * o.m[3],
      m[3] * o.m[1] + m[4] * o.m[4],
      m[3] * o.m[2] + m[4] * o.m[5] + m[5],
  }};
}

CanvasTransform augmentation_transform(double width, double height, double theta_deg,
                                       double out_size, CanvasPolicy policy) {
  if (!(out_size > 0.0)) throw std::invalid_argument("canvas size must be positive");
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("image size must be positive");

  const double s = out_size / std::max(width, height);
  const Affine2D letterbox{{s, 0.0, 0.5 * (out_size - width * s), 0.0, s, 0.5 * (out_size - height * s)}};

  const auto [c, sn] = cos_sin_deg(theta_deg);
  double canvas = out_size;
  if (policy == CanvasPolicy::expand) {
    canvas = std::ceil(out_size * (std::abs(c) + std::abs(sn)) - 1e-9);
  }
  const double cx = 0.5 * out_size;
  const double shift = 0.5 * (canvas - out_size);
  // Rotate about the original canvas centre, then recentre on the (possibly larger) canvas.
  const Affine2D rotate{{c, sn, cx - c * cx - sn * cx + shift, -sn, c, cx + sn * cx - c * cx + shift}};
  return {rotate.compose(letterbox), canvas};
}

PalmAnnotation rotate_annotation(const PalmAnnotation& ann, double theta_deg, double out_size,
                                 CanvasPolicy policy) {
  const CanvasTransform tf =
      augmentation_transform(ann.image_width, ann.image_height, theta_deg, out_size, policy);
  auto move = [&](Point2D p, const char* label) {
    const Point2D q = tf.map.apply(p);
    if (policy == CanvasPolicy::skip &&
        (q.x < 0.0 || q.y < 0.0 || q.x > tf.size || q.y > tf.size)) {
      throw PointOutOfCanvas(std::string("point ") + label + " leaves the " +
                             std::to_string(static_cast<int>(tf.size)) + "px canvas at " +
                             std::to_string(theta_deg) + " degrees");
    }
    return q;
  };
  PalmAnnotation out = ann;
  if (ann.thumb_gap) out.thumb_gap = move(*ann.thumb_gap, "P1");
  out.gaps = {move(ann.gaps[0], "P2"), move(ann.gaps[1], "P3"), move(ann.gaps[2], "P4")};
  out.image_width = tf.size;
  out.image_height = tf.size;
  return out;
}

}  // namespace palmroi
