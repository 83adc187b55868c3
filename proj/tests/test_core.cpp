#include <sstream>

#include "doctest.h"
#include "flowtrack/core.hpp"

using namespace flowtrack;

TEST_CASE("point arithmetic") {
  Point3 a{1.0, 2.0, 3.0}, b{4.0, -1.0, 0.5};
  Point3 s = a + b;
  CHECK(s.x == 5.0);
  CHECK(s.y == 1.0);
  CHECK(s.z == 3.5);
  CHECK(dot(a, b) == doctest::Approx(1.0 * 4 - 2 + 1.5));
  Point3 c = cross(Point3{1, 0, 0}, Point3{0, 1, 0});
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 1.0);
  CHECK(norm(Point3{3, 4, 0}) == doctest::Approx(5.0));
  CHECK(finite(a));
  CHECK_FALSE(finite(Point3{1.0, std::nan(""), 0.0}));
}

TEST_CASE("constraint set labels round-trip") {
  const char* labels[] = {"out",          "out,in",
                          "out,bal",      "out,in,bal",
                          "out,bal,loop", "out,in,bal,loop"};
  for (const char* label : labels) {
    ConstraintSet cs = constraint_set_from_label(label);
    CHECK(cs.label() == label);
    CHECK_NOTHROW(cs.validate());
  }
}

TEST_CASE("constraint set validation rejects invalid combinations") {
  ConstraintSet no_out{false, false, false, false};
  CHECK_THROWS_AS(no_out.validate(), InvalidConstraintSet);
  ConstraintSet loop_no_bal{true, false, false, true};
  CHECK_THROWS_AS(loop_no_bal.validate(), InvalidConstraintSet);
  CHECK_THROWS_AS(constraint_set_from_label("out,loop"),
                  InvalidConstraintSet);
  CHECK_THROWS_AS(constraint_set_from_label("bananas"), InvalidConstraintSet);
  // out is implied: the label parser fills it in even when omitted
  CHECK(constraint_set_from_label("in,bal").label() == "out,in,bal");
}

TEST_CASE("label parsing is order-insensitive") {
  ConstraintSet a = constraint_set_from_label("loop,bal,out");
  CHECK(a.label() == "out,bal,loop");
  ConstraintSet b = constraint_set_from_label("bal,in,out");
  CHECK(b.label() == "out,in,bal");
}

TEST_CASE("sequence accessors") {
  FrameSequence seq;
  seq.frames = {{{0, 0, 0}, {1, 0, 0}}, {{0.5, 0, 0}}};
  CHECK(seq.frame_count() == 2);
  CHECK(seq.point_count(1) == 2);
  CHECK(seq.point_count(2) == 1);
  CHECK(seq.point({1, 2}).x == 1.0);
  CHECK(seq.contains({2, 1}));
  CHECK_FALSE(seq.contains({2, 2}));
  CHECK_FALSE(seq.contains({3, 1}));
  CHECK_FALSE(seq.contains(kSourceNode));
}

TEST_CASE("validate_sequence flags defects") {
  FrameSequence ok;
  ok.frames = {{{0, 0, 0}}, {{1, 0, 0}}};
  CHECK(validate_sequence(ok).empty());

  FrameSequence single;
  single.frames = {{{0, 0, 0}}};
  CHECK_FALSE(validate_sequence(single).empty());

  FrameSequence empty_frame;
  empty_frame.frames = {{{0, 0, 0}}, {}};
  CHECK_FALSE(validate_sequence(empty_frame).empty());

  FrameSequence non_finite;
  non_finite.frames = {{{0, 0, 0}}, {{std::nan(""), 0, 0}}};
  auto report = validate_sequence(non_finite);
  REQUIRE_FALSE(report.empty());
  REQUIRE(report.front().where.has_value());
  CHECK(report.front().where->frame == 2);
  CHECK_THROWS_AS(throw_on_violations(report), Error);
}

TEST_CASE("point ids order lexicographically") {
  CHECK(PointId{1, 2} < PointId{2, 1});
  CHECK(PointId{2, 1} < PointId{2, 3});
  CHECK(PointId{3, 4} == PointId{3, 4});
}
