#include <cmath>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "lcfusion/evaluation.hpp"
#include "lcfusion/rng.hpp"
#include "oracles.hpp"

using namespace lcf;

namespace {

Box3D make_box(double x, double y, double z, double l, double h, double w,
               double yaw) {
  Box3D b;
  b.center = Eigen::Vector3d(x, y, z);
  b.length = l;
  b.height = h;
  b.width = w;
  b.yaw = yaw;
  return b;
}

Box3D random_box(Rng& rng) {
  return make_box(rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                  rng.uniform(-1.0, 1.0), rng.uniform(1.0, 5.0),
                  rng.uniform(0.8, 2.5), rng.uniform(0.8, 3.0),
                  rng.uniform(-3.1, 3.1));
}

// Overlapping more often than not: the second box is a perturbation of the
// first half the time.
std::pair<Box3D, Box3D> random_pair(Rng& rng) {
  Box3D a = random_box(rng);
  Box3D b = random_box(rng);
  if (rng.bernoulli(0.5)) {
    b = a;
    b.center += Eigen::Vector3d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                                rng.uniform(-1.0, 1.0));
    b.yaw = wrap_angle(b.yaw + rng.uniform(-0.8, 0.8));
    b.length *= rng.uniform(0.7, 1.3);
    b.width *= rng.uniform(0.7, 1.3);
    b.height *= rng.uniform(0.7, 1.3);
  }
  return {a, b};
}

GtAnnotation gt_of(const Box3D& box, const std::string& label,
                   double bbox_height = 60.0) {
  GtAnnotation gt;
  gt.label = label;
  gt.box = box;
  gt.bbox = Box2D{100.0, 100.0, 180.0, 100.0 + bbox_height};
  return gt;
}

Detection3D det_of(const Box3D& box, const std::string& label, double score,
                   int id) {
  Detection3D d;
  d.box = box;
  d.label = label;
  d.score = score;
  d.id = id;
  return d;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("identical footprints have IoU one") {
  const Box3D a = make_box(3.0, -2.0, 0.5, 3.9, 1.56, 1.6, 0.7);
  CHECK(rotated_bev_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iou_3d(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a square maps onto itself under a quarter turn") {
  const Box3D sq = make_box(1.0, 2.0, 0.0, 2.0, 1.0, 2.0, 0.3);
  Box3D turned = sq;
  turned.yaw = wrap_angle(sq.yaw + M_PI / 2.0);
  CHECK(rotated_bev_iou(sq, turned) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("axis-aligned boxes reduce to rectangle arithmetic") {
  const Box3D a = make_box(1.0, 1.0, 0.0, 2.0, 1.0, 2.0, 0.0);
  const Box3D b = make_box(2.0, 2.0, 0.0, 2.0, 1.0, 2.0, 0.0);
  CHECK(rotated_bev_iou(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-9));
  const Box3D far_away = make_box(50.0, 0.0, 0.0, 2.0, 1.0, 2.0, 0.0);
  CHECK(rotated_bev_iou(a, far_away) == 0.0);
}

TEST_CASE("vertically disjoint boxes have zero 3D IoU") {
  const Box3D low = make_box(0.0, 0.0, 0.0, 2.0, 1.0, 2.0, 0.4);
  Box3D high = low;
  high.center.z() = 5.0;
  CHECK(rotated_bev_iou(low, high) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(iou_3d(low, high) == 0.0);
}

TEST_CASE("equal height extents make the volumetric IoU match the BEV IoU") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    auto [a, b] = random_pair(rng);
    b.center.z() = a.center.z();
    b.height = a.height;
    CHECK(iou_3d(a, b) ==
          doctest::Approx(rotated_bev_iou(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("rigid motions of both boxes preserve the IoU") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto [a, b] = random_pair(rng);
    const double theta = rng.uniform(-3.1, 3.1);
    const Eigen::Vector3d shift(rng.uniform(-10.0, 10.0),
                                rng.uniform(-10.0, 10.0),
                                rng.uniform(-2.0, 2.0));
    const Eigen::Matrix3d rot =
        Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    auto moved = [&](Box3D box) {
      box.center = rot * box.center + shift;
      box.yaw = wrap_angle(box.yaw + theta);
      return box;
    };
    CHECK(rotated_bev_iou(moved(a), moved(b)) ==
          doctest::Approx(rotated_bev_iou(a, b)).epsilon(1e-9));
    CHECK(iou_3d(moved(a), moved(b)) ==
          doctest::Approx(iou_3d(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("both IoU metrics agree with a Monte Carlo estimate") {
  Rng rng(99);
  for (int trial = 0; trial < 15; ++trial) {
    auto [a, b] = random_pair(rng);
    Rng mc = Rng::derive(1234, static_cast<std::uint64_t>(trial));
    CHECK(std::abs(rotated_bev_iou(a, b) - oracle::mc_bev_iou(a, b, 1000, mc)) <
          2e-3);
    CHECK(std::abs(iou_3d(a, b) - oracle::mc_iou_3d(a, b, 100, mc)) < 2e-3);
  }
}

TEST_CASE("difficulty tiers follow the height/occlusion/truncation cutoffs") {
  GtAnnotation gt = gt_of(make_box(10, 0, 0, 4, 1.5, 1.6, 0), "Car");

  gt.bbox = Box2D{0, 0, 40, 50};  // height 50
  gt.occlusion = 0;
  gt.truncation = 0.0;
  CHECK(assign_difficulty(gt) == Difficulty::Easy);

  gt.bbox = Box2D{0, 0, 40, 30};  // height 30
  gt.occlusion = 1;
  gt.truncation = 0.2;
  CHECK(assign_difficulty(gt) == Difficulty::Moderate);

  gt.occlusion = 2;
  CHECK(assign_difficulty(gt) == Difficulty::Hard);

  gt.bbox = Box2D{0, 0, 40, 20};  // height 20: below every tier
  gt.occlusion = 0;
  gt.truncation = 0.0;
  CHECK(assign_difficulty(gt) == Difficulty::Ignored);

  gt.bbox = Box2D{0, 0, 40, 60};
  gt.truncation = 0.6;
  CHECK(assign_difficulty(gt) == Difficulty::Ignored);
}

TEST_CASE("perfect detections give AP one, no detections give zero") {
  std::vector<std::vector<GtAnnotation>> gts(3);
  std::vector<std::vector<Detection3D>> dets(3);
  int id = 0;
  Rng rng(55);
  for (std::size_t f = 0; f < gts.size(); ++f) {
    for (int i = 0; i < 3; ++i) {
      // Spaced out so no detection can match a neighbour's ground truth.
      const Box3D box = make_box(10.0 + 12.0 * i, 3.0 * static_cast<double>(f),
                                 0.0, 3.9, 1.56, 1.6, rng.uniform(-3.1, 3.1));
      gts[f].push_back(gt_of(box, "Car"));
      dets[f].push_back(det_of(box, "Car", 1.0, id++));
    }
  }

  const auto perfect = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                                  IouMetric::Iou3D);
  REQUIRE(perfect.ap.has_value());
  CHECK(*perfect.ap == doctest::Approx(1.0).epsilon(1e-9));

  const std::vector<std::vector<Detection3D>> none(3);
  const auto empty = compute_ap(none, gts, "Car", Difficulty::Easy, 0.7,
                                IouMetric::Iou3D);
  REQUIRE(empty.ap.has_value());
  CHECK(*empty.ap == 0.0);

  // Without ground truth the AP is undefined rather than zero.
  const std::vector<std::vector<GtAnnotation>> no_gt(3);
  CHECK(!compute_ap(dets, no_gt, "Car", Difficulty::Easy, 0.7,
                    IouMetric::Iou3D)
             .ap.has_value());
}

TEST_CASE("hand-traced two-object fixture") {
  // Two ground truths; one true positive at score 0.9, one false positive
  // at 0.8. Staircase: (recall 0.5, precision 1.0), (0.5, 0.5).
  const Box3D g0 = make_box(10, 0, 0, 4, 1.5, 1.6, 0);
  const Box3D g1 = make_box(30, 5, 0, 4, 1.5, 1.6, 0);
  const Box3D stray = make_box(-20, -10, 0, 4, 1.5, 1.6, 0);

  std::vector<std::vector<GtAnnotation>> gts(1);
  gts[0] = {gt_of(g0, "Car"), gt_of(g1, "Car")};
  std::vector<std::vector<Detection3D>> dets(1);
  dets[0] = {det_of(g0, "Car", 0.9, 0), det_of(stray, "Car", 0.8, 1)};

  const auto r40 = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                              IouMetric::Iou3D, ApInterpolation::R40);
  REQUIRE(r40.ap.has_value());
  CHECK(*r40.ap == doctest::Approx(0.5).epsilon(1e-9));

  const auto r11 = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                              IouMetric::Iou3D, ApInterpolation::R11);
  REQUIRE(r11.ap.has_value());
  CHECK(*r11.ap == doctest::Approx(6.0 / 11.0).epsilon(1e-9));

  REQUIRE(r40.curve.size() == 2);
  CHECK(r40.curve[0].score == doctest::Approx(0.9));
  CHECK(r40.curve[0].recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r40.curve[0].precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r40.curve[1].recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r40.curve[1].precision == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("harder-tier ground truth absorbs detections without penalty") {
  const Box3D easy_box = make_box(10, 0, 0, 4, 1.5, 1.6, 0);
  const Box3D hard_box = make_box(30, 5, 0, 4, 1.5, 1.6, 0);

  GtAnnotation hard_gt = gt_of(hard_box, "Car", 30.0);  // height 30
  hard_gt.occlusion = 2;                                // Hard tier

  std::vector<std::vector<GtAnnotation>> gts(1);
  gts[0] = {gt_of(easy_box, "Car"), hard_gt};
  std::vector<std::vector<Detection3D>> dets(1);
  dets[0] = {det_of(hard_box, "Car", 0.9, 0), det_of(easy_box, "Car", 0.8, 1)};

  // At Easy the hard GT is out of scope: the 0.9 detection is absorbed,
  // the 0.8 detection is the only counted one and it is a true positive.
  const auto r = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                            IouMetric::Iou3D);
  REQUIRE(r.ap.has_value());
  CHECK(*r.ap == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(r.curve.size() == 1);
  CHECK(r.curve[0].precision == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("appending detections moves AP in the expected direction") {
  Rng rng(321);
  std::vector<std::vector<GtAnnotation>> gts(1);
  std::vector<Box3D> boxes;
  for (int i = 0; i < 4; ++i) {
    boxes.push_back(make_box(10.0 + 8.0 * i, 0, 0, 4, 1.5, 1.6, 0));
    gts[0].push_back(gt_of(boxes.back(), "Car"));
  }
  std::vector<std::vector<Detection3D>> dets(1);
  dets[0] = {det_of(boxes[0], "Car", 0.9, 0)};

  const auto base = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                               IouMetric::Iou3D);

  SUBCASE("a low-scored false positive cannot raise AP") {
    dets[0].push_back(
        det_of(make_box(-30, -20, 0, 4, 1.5, 1.6, 0), "Car", 0.1, 9));
    const auto worse = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                                  IouMetric::Iou3D);
    CHECK(*worse.ap <= *base.ap + 1e-12);
  }
  SUBCASE("a true positive on an unmatched ground truth cannot lower AP") {
    dets[0].push_back(det_of(boxes[1], "Car", 0.85, 9));
    const auto better = compute_ap(dets, gts, "Car", Difficulty::Easy, 0.7,
                                   IouMetric::Iou3D);
    CHECK(*better.ap >= *base.ap - 1e-12);
  }
}

TEST_CASE("full report sweeps classes, difficulties and both metrics") {
  const Box3D car_box = make_box(10, 0, 0, 4, 1.5, 1.6, 0);
  std::vector<std::vector<GtAnnotation>> gts(1);
  gts[0] = {gt_of(car_box, "Car")};
  std::vector<std::vector<Detection3D>> dets(1);
  dets[0] = {det_of(car_box, "Car", 1.0, 0)};

  const std::vector<std::string> labels{"Car", "Pedestrian"};
  const std::vector<double> thresholds{0.7, 0.5};
  const EvalReport report = evaluate_detections(dets, gts, labels, thresholds);

  CHECK(report.entries.size() == 2 * 3 * 2);
  int car_entries = 0;
  for (const auto& e : report.entries) {
    if (e.label == "Car") {
      ++car_entries;
      REQUIRE(e.result.ap.has_value());
      CHECK(*e.result.ap == doctest::Approx(1.0).epsilon(1e-9));
    } else {
      CHECK(!e.result.ap.has_value());  // no pedestrian ground truth
    }
  }
  CHECK(car_entries == 6);

  const std::string table = eval_report_table(report);
  CHECK(table.find("Car") != std::string::npos);
  CHECK(table.find("Pedestrian") != std::string::npos);

  const auto parsed = nlohmann::json::parse(eval_report_json(report));
  REQUIRE(parsed.contains("Car"));
  REQUIRE(parsed["Car"].contains("3d"));
  CHECK(parsed["Car"]["3d"]["easy"]["ap"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(parsed["Pedestrian"]["bev"]["hard"]["ap"].is_null());
}

}  // TEST_SUITE
