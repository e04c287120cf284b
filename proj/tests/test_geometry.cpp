#include <doctest.h>

#include <cmath>
#include <numbers>

#include "palmroi/errors.hpp"
#include "palmroi/geometry.hpp"
#include "support.hpp"

using namespace palmroi;
using namespace palmroi::testing;

namespace {

PalmAnnotation trivial_annotation() {
  PalmAnnotation ann;
  ann.gaps = {Point2D{0, 0}, Point2D{2, 0}, Point2D{4, 0}};
  ann.thumb_gap = Point2D{1, 4};
  ann.image_width = 10;
  ann.image_height = 10;
  return ann;
}

void check_point(Point2D got, Point2D want, double tol = 1e-12) {
  CHECK(std::abs(got.x - want.x) <= tol);
  CHECK(std::abs(got.y - want.y) <= tol);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("derive_triple on axis-aligned gaps") {
  const KeypointTriple t = derive_triple(trivial_annotation());
  CHECK(t.a == Point2D{1, 0});
  CHECK(t.b == Point2D{3, 0});
  CHECK(t.c == Point2D{2, 3});
}

TEST_CASE("derive_triple rotated by 90 degrees") {
  PalmAnnotation ann;
  ann.gaps = {Point2D{0, 0}, Point2D{0, 2}, Point2D{0, 4}};
  ann.thumb_gap = Point2D{-4, 1};
  const KeypointTriple t = derive_triple(ann);
  CHECK(t.a == Point2D{0, 1});
  CHECK(t.b == Point2D{0, 3});
  CHECK(std::abs(t.c.x + 3) < 1e-12);
  CHECK(std::abs(t.c.y - 2) < 1e-12);
}

TEST_CASE("derive_triple rejects coincident gap midpoints") {
  PalmAnnotation ann = trivial_annotation();
  ann.gaps = {Point2D{1, 1}, Point2D{1, 1}, Point2D{1, 1}};
  CHECK_THROWS_AS(derive_triple(ann), DegenerateAnnotation);
}

TEST_CASE("derive_triple without P1 follows the palm-side flag") {
  PalmAnnotation ann = trivial_annotation();
  ann.thumb_gap.reset();
  CHECK_THROWS_AS(derive_triple(ann), DegenerateAnnotation);
  // d = B - A = (2, 0); the positive normal (-d.y, d.x) points to +y.
  ann.palm_side = PalmSide::pos_normal;
  CHECK(derive_triple(ann).c == Point2D{2, 3});
  ann.palm_side = PalmSide::neg_normal;
  CHECK(derive_triple(ann).c == Point2D{2, -3});
}

TEST_CASE("derive_triple rejects P1 on the AB line") {
  PalmAnnotation ann = trivial_annotation();
  ann.thumb_gap = Point2D{7, 0};
  CHECK_THROWS_AS(derive_triple(ann), DegenerateAnnotation);
}

TEST_CASE("validate checks image bounds and size") {
  PalmAnnotation ann = trivial_annotation();
  CHECK_NOTHROW(validate(ann));
  ann.gaps[2] = Point2D{11, 0};
  CHECK_THROWS_AS(validate(ann), DataError);
  ann = trivial_annotation();
  ann.image_width = 0;
  CHECK_THROWS_AS(validate(ann), DataError);
}

TEST_CASE("frame_from_triple examples") {
  LocalFrame f = frame_from_triple({{1, 0}, {3, 0}, {2, 3}});
  CHECK(f.origin == Point2D{2, 0});
  CHECK(f.unit == 2.0);
  CHECK(f.y_axis == Point2D{0, -1});
  CHECK(f.x_axis == Point2D{1, 0});

  f = frame_from_triple({{0, 1}, {0, 3}, {-3, 2}});
  CHECK(f.origin == Point2D{0, 2});
  CHECK(f.unit == 2.0);
  CHECK(f.y_axis == Point2D{1, 0});
  CHECK(f.x_axis == Point2D{0, 1});

  CHECK_THROWS_AS(frame_from_triple({{0, 0}, {2, 0}, {5, 0}}), DegenerateTriple);
}

TEST_CASE("frame ignores A/B order") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const KeypointTriple t = derive_triple(random_annotation(rng));
    const LocalFrame f1 = frame_from_triple(t);
    const LocalFrame f2 = frame_from_triple({t.b, t.a, t.c});
    CHECK(f1.origin == f2.origin);
    CHECK(f1.unit == f2.unit);
    CHECK(f1.x_axis == f2.x_axis);
    CHECK(f1.y_axis == f2.y_axis);
  }
}

TEST_CASE("frame axes are orthonormal, clockwise, and point away from the palm") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const KeypointTriple t = derive_triple(random_annotation(rng));
    const LocalFrame f = frame_from_triple(t);
    CHECK(std::abs(norm(f.x_axis) - 1) < 1e-9);
    CHECK(std::abs(norm(f.y_axis) - 1) < 1e-9);
    CHECK(std::abs(dot(f.x_axis, f.y_axis)) < 1e-9);
    CHECK(f.x_axis == Point2D{-f.y_axis.y, f.y_axis.x});
    CHECK(dot(f.y_axis, t.c - f.origin) < 0);
  }
}

TEST_CASE("roi_quad example") {
  const RoiQuad q = roi_quad(LocalFrame{{2, 0}, {1, 0}, {0, -1}, 2});
  CHECK(q.side == 5.0);
  check_point(q.center(), {2, 3});
  check_point(q.corners[0], {-0.5, 0.5});
  check_point(q.corners[1], {4.5, 0.5});
  check_point(q.corners[2], {4.5, 5.5});
  check_point(q.corners[3], {-0.5, 5.5});

  CHECK(roi_quad(LocalFrame{{0, 0}, {1, 0}, {0, -1}, 100}).side == 250.0);
}

TEST_CASE("roi_quad rotates with its frame") {
  const RoiQuad base = roi_quad(LocalFrame{{2, 0}, {1, 0}, {0, -1}, 2});
  for (double deg : {17.0, 90.0, 133.0, 250.0}) {
    const double r = deg * std::numbers::pi / 180;
    const LocalFrame f{{2, 0}, rotate({1, 0}, r), rotate({0, -1}, r), 2};
    const RoiQuad q = roi_quad(f);
    for (int k = 0; k < 4; ++k) {
      const Point2D want = Point2D{2, 0} + rotate(base.corners[k] - Point2D{2, 0}, r);
      check_point(q.corners[k], want, 1e-9);
    }
  }
}

TEST_CASE("roi centre coincides with C") {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const KeypointTriple t = derive_triple(random_annotation(rng));
    const RoiQuad q = roi_quad(frame_from_triple(t));
    CHECK(distance(q.center(), t.c) < 1e-9);
  }
}

TEST_CASE("quad matches the reference construction") {
  Rng rng(14);
  for (int i = 0; i < 500; ++i) {
    const PalmAnnotation ann = random_annotation(rng);
    const RoiQuad q = roi_quad(frame_from_triple(derive_triple(ann)));
    const auto ref = reference_corners(ann);
    for (int k = 0; k < 4; ++k) CHECK(distance(q.corners[k], ref[k]) < 1e-9);
  }
}

TEST_CASE("boxes_from_annotation") {
  const auto boxes = boxes_from_annotation(trivial_annotation(), BoxSizing(1.5, 2.0));
  REQUIRE(boxes.size() == 3);
  CHECK(boxes[0].class_id == BoxClass::double_finger_gap);
  CHECK(boxes[0].center == Point2D{1, 0});
  CHECK(boxes[0].width == 3.0);
  CHECK(boxes[0].height == 3.0);
  CHECK(boxes[1].class_id == BoxClass::double_finger_gap);
  CHECK(boxes[1].center == Point2D{3, 0});
  CHECK(boxes[1].width == 3.0);
  CHECK(boxes[2].class_id == BoxClass::palm_center);
  CHECK(boxes[2].center == Point2D{2, 3});
  CHECK(boxes[2].width == 4.0);
  CHECK(boxes[2].height == 4.0);

  CHECK_THROWS_AS(BoxSizing(0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxSizing(1.5, -1.0), std::invalid_argument);
}

TEST_CASE("boxes follow rotated points with unchanged sides") {
  PalmAnnotation ann = trivial_annotation();
  ann.gaps = {Point2D{40, 50}, Point2D{50, 50}, Point2D{60, 52}};
  ann.thumb_gap = Point2D{45, 80};
  ann.image_width = 100;
  ann.image_height = 100;
  const auto before = boxes_from_annotation(ann);
  const PalmAnnotation rotated = rotate_annotation(ann, 30, 100);
  const auto after = boxes_from_annotation(rotated);
  // Canvas equals the image here, so the map is a pure rotation about (50, 50).
  const double r = -30 * std::numbers::pi / 180;  // counter-clockwise on screen
  for (int k = 0; k < 3; ++k) {
    const Point2D want = Point2D{50, 50} + rotate(before[k].center - Point2D{50, 50}, r);
    CHECK(distance(after[k].center, want) < 1e-9);
    CHECK(std::abs(after[k].width - before[k].width) < 1e-9);
  }
}

TEST_CASE("rotate_annotation identities") {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const PalmAnnotation ann = random_annotation(rng, 640, 480);
    const PalmAnnotation r0 = rotate_annotation(ann, 0, 416, CanvasPolicy::expand);
    const PalmAnnotation r360 = rotate_annotation(ann, 360, 416, CanvasPolicy::expand);
    for (int k = 0; k < 3; ++k) CHECK(distance(r0.gaps[k], r360.gaps[k]) < 1e-9);
    // theta = 0 is a uniform scale plus the letterbox offset.
    const double s = 416.0 / 640.0;
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(r0.gaps[k].x - s * ann.gaps[k].x) < 1e-9);
      CHECK(std::abs(r0.gaps[k].y - (s * ann.gaps[k].y + (416 - s * 480) / 2)) < 1e-9);
    }
    CHECK(r0.image_width == 416);
    CHECK(r0.image_height == 416);
  }
}

TEST_CASE("rotate_annotation skips or expands off-canvas points") {
  PalmAnnotation ann;
  ann.gaps = {Point2D{1, 1}, Point2D{5, 1}, Point2D{9, 1}};
  ann.thumb_gap = Point2D{5, 9};
  ann.image_width = 10;
  ann.image_height = 10;
  // A corner point leaves the square at 45 degrees.
  CHECK_THROWS_AS(rotate_annotation(ann, 45, 100), PointOutOfCanvas);
  const PalmAnnotation r = rotate_annotation(ann, 45, 100, CanvasPolicy::expand);
  CHECK(r.image_width > 100);
  CHECK_NOTHROW(validate(r));
}

TEST_CASE("affine inverse and compose") {
  const CanvasTransform t = augmentation_transform(640, 480, 33, 416);
  const Affine2D id = t.map.compose(t.map.inverse());
  for (Point2D p : {Point2D{0, 0}, Point2D{100, -3}, Point2D{7.5, 400}}) {
    CHECK(distance(id.apply(p), p) < 1e-9);
  }
}

}  // TEST_SUITE
