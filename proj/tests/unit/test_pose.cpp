#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "polarndf/config.hpp"
#include "polarndf/error.hpp"
#include "polarndf/format_map.hpp"
#include "polarndf/io.hpp"
#include "polarndf/labeled.hpp"
#include "polarndf/transforms.hpp"

using namespace polarndf;

TEST_CASE("skeleton data files match the built-in definitions") {
  const auto dir = std::filesystem::path(POLARNDF_DATA_DIR) / "skeletons";
  CHECK(Skeleton::load(dir / "h36m17.cfg").hash() == Skeleton::h36m17().hash());
  CHECK(Skeleton::load(dir / "h36m17_j15.cfg").hash() == Skeleton::h36m17_j15().hash());
  CHECK(Skeleton::h36m17().hash() != Skeleton::h36m17_j15().hash());
}

TEST_CASE("skeleton invariants") {
  const auto s = Skeleton::h36m17();
  CHECK(s.num_connections() == 16);
  CHECK(s.joint_names()[static_cast<std::size_t>(s.root_index())] == "Hip");
  // every non-root joint is the child of exactly one connection
  std::vector<int> children(kNumKeypoints, 0);
  for (const auto& c : s.connections()) children[static_cast<std::size_t>(c.child)]++;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) CHECK(children[j] == (static_cast<int>(j) == s.root_index() ? 0 : 1));
  CHECK(s.mirrored(s.joint_index("LWrist")) == s.joint_index("RWrist"));
  CHECK(s.mirrored(s.joint_index("Nose")) == s.joint_index("Nose"));

  const auto j15 = Skeleton::h36m17_j15();
  CHECK(j15.num_connections() == 15);
  REQUIRE(j15.derived_joints().size() == 1);
  CHECK(j15.derived_joints()[0].joint == j15.joint_index("Spine"));
}

TEST_CASE("malformed skeleton configs are rejected") {
  std::string text(Skeleton::h36m17_text());
  CHECK_THROWS_AS(Skeleton::from_config(ConfigDocument::parse(text + "\n[connections]\nHip -> Nose\n")), Error);
  const auto pos = text.find("Nose -> Head");
  std::string cyc = text;
  cyc.replace(pos, 12, "Head -> Head");
  CHECK_THROWS_AS(Skeleton::from_config(ConfigDocument::parse(cyc)), Error);
}

TEST_CASE("to_polar matches scalar trigonometry per connection") {
  std::mt19937_64 rng(1);
  const auto s = Skeleton::h36m17();
  for (int t = 0; t < 200; ++t) {
    const auto x = normalize(testutil::random_pose(rng), s);
    const auto p = to_polar(x, s);
    CHECK(p.is_valid(1e-12));
    for (std::size_t j = 0; j < s.num_connections(); ++j) {
      const auto& c = s.connections()[j];
      const double dx = x.keypoints[static_cast<std::size_t>(c.child)].x - x.keypoints[static_cast<std::size_t>(c.parent)].x;
      const double dy = x.keypoints[static_cast<std::size_t>(c.child)].y - x.keypoints[static_cast<std::size_t>(c.parent)].y;
      const double ang = std::atan2(dy, dx);
      CHECK(p.theta1(j) == doctest::Approx(std::cos(ang)).epsilon(1e-12));
      CHECK(p.theta2(j) == doctest::Approx(std::sin(ang)).epsilon(1e-12));
      CHECK(p.r(j) == doctest::Approx(std::sqrt(dx * dx + dy * dy)).epsilon(1e-12));
    }
  }
}

TEST_CASE("degenerate connection maps to the unit x direction") {
  const auto s = Skeleton::h36m17();
  CartesianPose x;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) x.set(j, {0.1 * static_cast<double>(j), 0.05 * static_cast<double>(j * j)});
  const auto& c = s.connections()[3];
  x.set(static_cast<std::size_t>(c.child), x.at(static_cast<std::size_t>(c.parent)));
  const auto p = to_polar(x, s);
  CHECK(p.triple(3) == PolarTriple{1.0, 0.0, 0.0});
}

TEST_CASE("j15 round trip is exact when the spine sits at the midpoint") {
  std::mt19937_64 rng(2);
  const auto s = Skeleton::h36m17_j15();
  const auto& d = s.derived_joints()[0];
  for (int t = 0; t < 100; ++t) {
    auto x = normalize(testutil::random_pose(rng), s);
    Vec2 sum{};
    for (int src : d.sources) sum = sum + x.at(static_cast<std::size_t>(src));
    x.set(static_cast<std::size_t>(d.joint), (1.0 / static_cast<double>(d.sources.size())) * sum);
    const auto back = to_cartesian(to_polar(x, s), s, x.at(static_cast<std::size_t>(s.root_index())));
    CHECK(max_abs_difference(back, x) < 1e-12);
  }
}

TEST_CASE("normalize: root at origin, unit height, idempotent") {
  std::mt19937_64 rng(3);
  const auto s = Skeleton::h36m17();
  for (int t = 0; t < 100; ++t) {
    const auto x = normalize(testutil::random_pose(rng, 300.0), s);
    const auto root = x.at(static_cast<std::size_t>(s.root_index()));
    CHECK(std::abs(root.x) < 1e-12);
    CHECK(std::abs(root.y) < 1e-12);
    double lo = 1e9, hi = -1e9;
    for (const auto& k : x.keypoints) {
      lo = std::min(lo, k.y);
      hi = std::max(hi, k.y);
    }
    CHECK(hi - lo == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_abs_difference(normalize(x, s), x) < 1e-12);
  }
  CartesianPose flat;
  CHECK_THROWS_AS(normalize(flat, s), Error);
}

TEST_CASE("normalization transform inverts") {
  std::mt19937_64 rng(4);
  const auto s = Skeleton::h36m17();
  const auto x = testutil::random_pose(rng, 200.0);
  const auto t = normalization_for(x, s);
  CHECK(max_abs_difference(t.invert(t.apply(x)), x) < 1e-9);
}

TEST_CASE("flip is an involution that swaps sides") {
  std::mt19937_64 rng(5);
  const auto s = Skeleton::h36m17();
  const auto x = testutil::random_pose(rng);
  const auto f = flip_horizontal(x, s);
  CHECK(flip_horizontal(f, s) == x);
  const auto l = static_cast<std::size_t>(s.joint_index("LElbow"));
  const auto r = static_cast<std::size_t>(s.joint_index("RElbow"));
  CHECK(f.keypoints[l].x == -x.keypoints[r].x);
  CHECK(f.keypoints[l].y == x.keypoints[r].y);
}

TEST_CASE("interpolation inserts factor-1 frames between pairs") {
  PoseSequence seq;
  seq.sequence_id = "s";
  CartesianPose a, b;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    a.set(j, {0.0, 0.0});
    b.set(j, {5.0, -10.0});
  }
  seq.frames = {{0, a}, {3, b}, {7, a}};
  const auto out = interpolate_sequence(seq, 5);
  REQUIRE(out.frames.size() == 11);
  CHECK(out.frames[2].pose.at(4).x == doctest::Approx(2.0));
  CHECK(out.frames[2].pose.at(4).y == doctest::Approx(-4.0));
  CHECK(out.frames[10].frame_index == 10);
  CHECK(interpolate_sequence(seq, 1).frames.size() == 3);
  seq.frames.resize(1);
  CHECK_THROWS_AS(interpolate_sequence(seq, 5), Error);
}

TEST_CASE("cartesian gradient of the polar map agrees with finite differences") {
  std::mt19937_64 rng(6);
  const auto s = Skeleton::h36m17();
  const auto x = normalize(testutil::random_pose(rng), s);
  std::vector<double> w(3 * s.num_connections());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : w) v = u(rng);
  auto scalar = [&](const CartesianPose& p) {
    const auto q = to_polar(p, s);
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * q.flat()[i];
    return acc;
  };
  const auto g = polar_gradient_to_cartesian(x, s, w);
  const double h = 1e-6;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    for (int axis = 0; axis < 2; ++axis) {
      auto hi = x, lo = x;
      (axis ? hi.keypoints[j].y : hi.keypoints[j].x) += h;
      (axis ? lo.keypoints[j].y : lo.keypoints[j].x) -= h;
      const double fd = (scalar(hi) - scalar(lo)) / (2 * h);
      CHECK((axis ? g[j].y : g[j].x) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("pose file round trip and parse errors") {
  std::vector<PoseRecord> recs(2);
  recs[0].sequence_id = "a";
  recs[0].frame_index = 0;
  recs[1].sequence_id = "a";
  recs[1].frame_index = 4;
  recs[1].source = "det";
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    recs[0].pose.keypoints[j] = {0.1 * static_cast<double>(j), 1.0 / 3.0, std::nullopt};
    recs[1].pose.keypoints[j] = {-1e-7, 123.456, 0.5};
  }
  const auto back = parse_pose_records(format_pose_records(recs));
  REQUIRE(back.size() == 2);
  CHECK(back[0].pose == recs[0].pose);
  CHECK(back[1].pose == recs[1].pose);
  CHECK(back[1].source == "det");
  CHECK_THROWS_AS(parse_pose_records("a,0,gt,1,2\n"), Error);
  recs[1].source = "gt";
  CHECK(group_sequences(recs).size() == 1);
  CHECK_THROWS_AS(group_sequences({recs[1], recs[0]}), Error);
}

TEST_CASE("labeled dataset header is checked") {
  std::mt19937_64 rng(7);
  std::vector<LabeledPose> samples{{testutil::random_polar(rng, 16), 0.0, true},
                                   {testutil::random_polar(rng, 16), 0.25, false}};
  const auto text = format_labeled(samples, 16);
  const auto back = parse_labeled(text);
  REQUIRE(back.size() == 2);
  CHECK(back[1].pose == samples[1].pose);
  CHECK(back[1].distance == 0.25);
  CHECK_FALSE(back[1].is_real);
  try {
    parse_labeled("WRONG 1\nconnections 16\n");
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatVersionMismatch);
  }
}

TEST_CASE("config sections, list items and typed values") {
  const auto doc = ConfigDocument::parse("seed = 4\n# c\n[split.val]\ns1\ns2\n[train]\nlr = 1e-3\nflag = true\n");
  CHECK(doc.section("").get_int("seed", 0) == 4);
  CHECK(doc.section("split.val").items() == std::vector<std::string>{"s1", "s2"});
  CHECK(doc.section("train").get_double("lr", 0) == 1e-3);
  CHECK(doc.section("train").get_bool("flag", false));
  CHECK_THROWS_AS(ConfigDocument::parse("[a]\nx = 1\nx = 2\n"), Error);
  CHECK_THROWS_AS(doc.section("train").get_int("lr", 0), Error);
}

TEST_CASE("format map converts COCO order with synthesized joints") {
  const auto s = Skeleton::h36m17();
  const auto map = FormatMap::load(std::filesystem::path(POLARNDF_DATA_DIR) / "formats" / "coco_wholebody_body.map", s);
  SourceKeypoints src(17);
  for (std::size_t i = 0; i < 17; ++i) src[i] = Keypoint2D{static_cast<double>(i), 2.0 * static_cast<double>(i), 0.9};
  const auto p = convert_format(src, map);
  const auto at = [&](const char* n) { return p.at(static_cast<std::size_t>(s.joint_index(n))); };
  CHECK(at("LShoulder") == Vec2{5.0, 10.0});
  CHECK(at("Hip") == Vec2{11.5, 23.0});
  CHECK(at("Spine") == Vec2{8.5, 17.0});
  CHECK(at("Thorax") == Vec2{5.5, 11.0});
}
