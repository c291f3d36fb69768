#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "lcfusion/errors.hpp"
#include "lcfusion/evaluation.hpp"
#include "lcfusion/pipeline.hpp"
#include "lcfusion/synthetic.hpp"

using namespace lcf;

namespace {

/// Scene tuned so stereo recovery has easy geometry: mid-range cars only,
/// generous clutter for the frustum crop.
SceneConfig recovery_friendly() {
  SceneConfig cfg;
  cfg.class_weights = {1.0, 0.0, 0.0};
  cfg.x_min = 12.0;
  cfg.x_max = 25.0;
  cfg.yaw_max = 0.3;
  cfg.min_x_separation = 3.0;
  cfg.keepout_y_lo = -0.9;
  cfg.keepout_y_hi = 0.35;
  cfg.min_gap_2d_px = 8.0;
  cfg.ground_points = 400;
  return cfg;
}

double bev_distance(const Box3D& a, const Box3D& b) {
  return (a.center.head<2>() - b.center.head<2>()).norm();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("clean detections pass through unchanged") {
  const SyntheticScene scene = generate_scene(41, 6);
  const SimulatedDetections sim = simulate_detectors(scene, {}, 1);
  const FusionConfig cfg;

  const FusionOutcome out =
      fuse_frame(sim.lidar, sim.rgb, scene.cloud, scene.calib, cfg);

  std::size_t leftover_rgb = 0;
  for (const auto& [view, dets] : out.matches.unmatched_rgb)
    leftover_rgb += dets.size();
  CHECK(leftover_rgb == 0);
  CHECK(out.recovered.empty());
  REQUIRE(out.matches.surviving.size() == scene.gt.size());

  REQUIRE(out.fused.size() == scene.gt.size());
  for (std::size_t i = 0; i < scene.gt.size(); ++i) {
    const Detection3D& got = out.fused[i];
    const Detection3D& want = scene.gt[i];
    CHECK(got.box.center == want.box.center);
    CHECK(got.box.yaw == want.box.yaw);
    CHECK(got.label == want.label);
    CHECK(iou_3d(got.box, want.box) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(got.score == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("fused ids are always sequential") {
  const SyntheticScene scene = generate_scene(42, 5);
  DegradationSpec spec;
  spec.lidar_dropout = 0.4;
  spec.center_noise = 0.1;
  const SimulatedDetections sim = simulate_detectors(scene, spec, 3);
  const FusionOutcome out =
      fuse_frame(sim.lidar, sim.rgb, scene.cloud, scene.calib, FusionConfig{});
  for (std::size_t i = 0; i < out.fused.size(); ++i)
    CHECK(out.fused[i].id == static_cast<int>(i));
}

TEST_CASE("spurious lidar boxes are pruned") {
  const SyntheticScene scene = generate_scene(43, 5);
  DegradationSpec spec;
  spec.fp_rate = 1.0;
  const SimulatedDetections sim = simulate_detectors(scene, spec, 4);
  REQUIRE(sim.injected_fp_ids.size() == scene.gt.size());

  const FusionOutcome out =
      fuse_frame(sim.lidar, sim.rgb, scene.cloud, scene.calib, FusionConfig{});

  // Every fused box sits on a ground-truth object, never on an injection.
  REQUIRE(out.fused.size() == scene.gt.size());
  for (const auto& det : out.fused) {
    double nearest_gt = 1e18;
    for (const auto& gt : scene.gt)
      nearest_gt = std::min(nearest_gt, bev_distance(det.box, gt.box));
    CHECK(nearest_gt < 0.5);
    for (const int id : sim.injected_fp_ids) {
      const auto it =
          std::find_if(sim.lidar.begin(), sim.lidar.end(),
                       [id](const Detection3D& d) { return d.id == id; });
      REQUIRE(it != sim.lidar.end());
      CHECK(bev_distance(det.box, it->box) > 1.0);
    }
  }
  for (const Detection3D& survivor : out.matches.surviving)
    CHECK(std::find(sim.injected_fp_ids.begin(), sim.injected_fp_ids.end(),
                    survivor.id) == sim.injected_fp_ids.end());
}

TEST_CASE("a dropped object is recovered from its stereo pair") {
  const SyntheticScene scene = generate_scene(31, 1, recovery_friendly());
  DegradationSpec spec;
  spec.lidar_dropout = 1.0;
  const SimulatedDetections sim = simulate_detectors(scene, spec, 2);
  REQUIRE(sim.lidar.empty());
  REQUIRE(sim.rgb.size() == 2);

  const FusionOutcome out =
      fuse_frame(sim.lidar, sim.rgb, scene.cloud, scene.calib, FusionConfig{});

  REQUIRE(out.recovered.size() == 1);
  REQUIRE(out.fused.size() == 1);
  CHECK(out.fused[0].label == "Car");
  CHECK(bev_distance(out.fused[0].box, scene.gt[0].box) <
        0.5 * scene.gt[0].box.length);
  CHECK(out.fused[0].score > 0.0);
  CHECK(out.fused[0].score <= 1.0);

  // Recovery strictly improves recall over the LiDAR-only set here.
  CHECK(sim.lidar.empty());
  CHECK(!out.fused.empty());
}

TEST_CASE("unknown labels follow the configured policy") {
  const SyntheticScene scene = generate_scene(44, 3);
  const SimulatedDetections sim = simulate_detectors(scene, {}, 1);

  std::vector<Detection3D> lidar = sim.lidar;
  Detection3D alien = lidar[0];
  alien.label = "Tram";
  alien.id = 99;
  alien.box.center.y() += 4.0;
  lidar.push_back(alien);

  FusionConfig skip;
  REQUIRE(skip.unknown_class == UnknownClassPolicy::Skip);
  const FusionOutcome out =
      fuse_frame(lidar, sim.rgb, scene.cloud, scene.calib, skip);
  for (const auto& det : out.fused) CHECK(det.label != "Tram");

  FusionConfig strict;
  strict.unknown_class = UnknownClassPolicy::Error;
  CHECK_THROWS_AS(fuse_frame(lidar, sim.rgb, scene.cloud, scene.calib, strict),
                  DataError);
}

TEST_CASE("the bundle overload matches the flat-argument form") {
  const SyntheticScene scene = generate_scene(45, 4);
  DegradationSpec spec;
  spec.lidar_dropout = 0.3;
  const SimulatedDetections sim = simulate_detectors(scene, spec, 8);

  FrameBundle bundle;
  bundle.frame_id = "000000";
  bundle.cloud = scene.cloud;
  bundle.calib = scene.calib;
  bundle.rgb = sim.rgb;
  bundle.lidar = sim.lidar;

  const FusionConfig cfg;
  const FusionOutcome a =
      fuse_frame(sim.lidar, sim.rgb, scene.cloud, scene.calib, cfg);
  const FusionOutcome b = fuse_frame(bundle, cfg);
  REQUIRE(a.fused.size() == b.fused.size());
  for (std::size_t i = 0; i < a.fused.size(); ++i) {
    CHECK(a.fused[i].box.center == b.fused[i].box.center);
    CHECK(a.fused[i].score == b.fused[i].score);
    CHECK(a.fused[i].label == b.fused[i].label);
  }
}

TEST_CASE("localizer factory understands its two spellings") {
  const SyntheticScene scene = generate_scene(46, 1);

  FusionConfig geometric;
  geometric.localizer = "geometric";
  CHECK(static_cast<bool>(make_localizer(geometric, scene.calib)));

  FusionConfig external;
  external.localizer = "external:/tmp/lcf-localizer-test";
  external.external_timeout_s = 0.01;
  CHECK(static_cast<bool>(make_localizer(external, scene.calib)));

  FusionConfig bogus;
  bogus.localizer = "oracle";
  CHECK_THROWS_AS(make_localizer(bogus, scene.calib), ConfigError);
}

TEST_CASE("a supplied localizer overrides the configured one") {
  const SyntheticScene scene = generate_scene(31, 1, recovery_friendly());
  DegradationSpec spec;
  spec.lidar_dropout = 1.0;
  const SimulatedDetections sim = simulate_detectors(scene, spec, 2);

  int calls = 0;
  const FrustumLocalizer counting =
      [&calls](const FrustumProposal&,
               const std::string&) -> std::optional<LocalizerResult> {
    ++calls;
    return std::nullopt;
  };
  const FusionOutcome out = fuse_frame(sim.lidar, sim.rgb, scene.cloud,
                                       scene.calib, FusionConfig{}, &counting);
  CHECK(calls == 1);
  CHECK(out.recovered.empty());
  CHECK(out.fused.empty());
}

}  // TEST_SUITE
