#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "lcfusion/errors.hpp"
#include "lcfusion/kitti_io.hpp"
#include "lcfusion/rng.hpp"
#include "lcfusion/synthetic.hpp"

using namespace lcf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lcf_io_" + std::to_string(Rng(std::random_device{}()).next_u64()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

KittiCalib identity_calib() {
  KittiCalib calib;
  const std::vector<double> p_identity{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  calib.rows = {{"P0", p_identity},
                {"P1", p_identity},
                {"P2", p_identity},
                {"P3", p_identity},
                {"R0_rect", {1, 0, 0, 0, 1, 0, 0, 0, 1}},
                {"Tr_velo_to_cam", p_identity}};
  return calib;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_SUITE("kitti_io") {

TEST_CASE("identity projection rows give an identity calibration frame") {
  const CalibrationFrame frame = to_calibration_frame(identity_calib(), 100,
                                                      80);
  CHECK(frame.lidar_to_cam.isApprox(Eigen::Matrix4d::Identity(), 1e-15));
  REQUIRE(frame.pairs.size() == 1);
  CHECK(frame.view(0, CameraSide::Left)
            .P.isApprox(Eigen::Matrix<double, 3, 4>::Identity(), 1e-15));
  CHECK(frame.view(0, CameraSide::Left).image_width == 100);
  CHECK(frame.view(0, CameraSide::Right).image_height == 80);
}

TEST_CASE("calibration rows with the wrong arity are data errors") {
  TempDir tmp;
  const fs::path path = tmp.path / "calib.txt";
  write_text(path, "P2: 1 0 0 0 0 1 0 0 0 1 0\n");  // 11 values
  CHECK_THROWS_AS(read_calibration(path), DataError);

  KittiCalib calib;
  calib.rows = {{"P2", std::vector<double>(11, 0.0)}};
  CHECK_THROWS_AS(calib.matrix34("P2"), DataError);
  CHECK_THROWS_AS(calib.matrix34("P3"), DataError);  // missing key

  KittiCalib partial = identity_calib();
  std::erase_if(partial.rows, [](const auto& row) { return row.first == "P3"; });
  CHECK_THROWS_AS(to_calibration_frame(partial, 1242, 375), DataError);
}

TEST_CASE("calibration files round-trip to high precision") {
  TempDir tmp;
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    KittiCalib calib = identity_calib();
    for (auto& [key, values] : calib.rows) {
      for (double& v : values) v = rng.uniform(-100.0, 100.0);
    }
    const fs::path path = tmp.path / "calib.txt";
    write_calibration(calib, path);
    const KittiCalib loaded = read_calibration(path);
    REQUIRE(loaded.rows.size() == calib.rows.size());
    for (std::size_t i = 0; i < calib.rows.size(); ++i) {
      CHECK(loaded.rows[i].first == calib.rows[i].first);
      REQUIRE(loaded.rows[i].second.size() == calib.rows[i].second.size());
      for (std::size_t k = 0; k < calib.rows[i].second.size(); ++k) {
        CHECK(std::abs(loaded.rows[i].second[k] - calib.rows[i].second[k]) <
              1e-9);
      }
    }
  }
}

TEST_CASE("point clouds round-trip bit-exactly") {
  TempDir tmp;
  Rng rng(13);
  std::vector<Point3> cloud;
  for (int i = 0; i < 1000; ++i) {
    cloud.push_back({rng.uniform(-80.0, 80.0), rng.uniform(-40.0, 40.0),
                     rng.uniform(-3.0, 3.0), rng.uniform(0.0, 1.0)});
  }
  // Values pass through a float narrowing on write by design.
  for (Point3& p : cloud) {
    p.x = static_cast<float>(p.x);
    p.y = static_cast<float>(p.y);
    p.z = static_cast<float>(p.z);
    p.r = static_cast<float>(p.r);
  }

  const fs::path path = tmp.path / "scan.bin";
  write_point_cloud(cloud, path);
  CHECK(fs::file_size(path) == cloud.size() * 16);

  const auto loaded = read_point_cloud(path);
  REQUIRE(loaded.size() == cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    CHECK(loaded[i].x == cloud[i].x);
    CHECK(loaded[i].y == cloud[i].y);
    CHECK(loaded[i].z == cloud[i].z);
    CHECK(loaded[i].r == cloud[i].r);
  }
}

TEST_CASE("a truncated cloud file is a data error") {
  TempDir tmp;
  const fs::path path = tmp.path / "scan.bin";
  std::ofstream out(path, std::ios::binary);
  const char junk[10] = {};
  out.write(junk, sizeof(junk));
  out.close();
  CHECK_THROWS_AS(read_point_cloud(path), DataError);
}

TEST_CASE("camera-frame and internal boxes are inverse conversions") {
  const auto [raw, calib] = make_stereo_rig(SceneConfig{});
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    Box3D box;
    box.center = Eigen::Vector3d(rng.uniform(5.0, 50.0),
                                 rng.uniform(-15.0, 15.0),
                                 rng.uniform(-2.0, 1.0));
    box.length = rng.uniform(0.5, 6.0);
    box.height = rng.uniform(0.5, 3.0);
    box.width = rng.uniform(0.5, 2.5);
    box.yaw = rng.uniform(-3.14, 3.14);

    const KittiBox kb = internal_box_to_kitti(box, calib.lidar_to_cam);
    const Box3D back = kitti_box_to_internal(kb.x, kb.y, kb.z, kb.h, kb.w,
                                             kb.l, kb.ry, calib.lidar_to_cam);
    CHECK((back.center - box.center).norm() < 1e-9);
    CHECK(back.length == doctest::Approx(box.length).epsilon(1e-9));
    CHECK(back.height == doctest::Approx(box.height).epsilon(1e-9));
    CHECK(back.width == doctest::Approx(box.width).epsilon(1e-9));
    CHECK(std::abs(wrap_angle(back.yaw - box.yaw)) < 1e-9);
  }
}

TEST_CASE("observation angle subtracts the viewing direction") {
  CHECK(kitti_alpha(0.0, 0.0, 10.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kitti_alpha(0.0, 10.0, 10.0) ==
        doctest::Approx(-M_PI / 4.0).epsilon(1e-12));
  CHECK(kitti_alpha(1.0, 10.0, 10.0) ==
        doctest::Approx(1.0 - M_PI / 4.0).epsilon(1e-12));
}

TEST_CASE("label files reject the wrong column count") {
  TempDir tmp;
  const auto [raw, calib] = make_stereo_rig(SceneConfig{});
  const fs::path path = tmp.path / "bad.txt";
  // 14 columns: one 3D field missing.
  write_text(path,
             "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 "
             "-0.65 1.71 46.70\n");
  CHECK_THROWS_AS(read_annotations(path, calib, {}), DataError);
  CHECK_THROWS_AS(
      read_detections_2d(path, LabelKind::GroundTruth, ViewId{}, {}),
      DataError);
  // A result row additionally needs the score column.
  write_text(path,
             "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 "
             "-0.65 1.71 46.70 2.30\n");
  CHECK_THROWS_AS(read_detections_3d(path, LabelKind::Result, calib, {}),
                  DataError);
  write_text(path, "Car zero 0 -1.58 587 173 614 200 1.65 1.67 3.64 -0.65 "
                   "1.71 46.70 2.30\n");
  CHECK_THROWS_AS(read_annotations(path, calib, {}), DataError);
}

TEST_CASE("annotations round-trip through label files") {
  TempDir tmp;
  const auto [raw, calib] = make_stereo_rig(SceneConfig{});
  Rng rng(15);

  std::vector<GtAnnotation> gts;
  for (int i = 0; i < 30; ++i) {
    GtAnnotation gt;
    gt.label = i % 3 == 0 ? "Car" : (i % 3 == 1 ? "Pedestrian" : "Cyclist");
    gt.truncation = rng.uniform(0.0, 0.9);
    gt.occlusion = rng.uniform_int(0, 3);
    gt.bbox = Box2D{rng.uniform(0.0, 600.0), rng.uniform(0.0, 180.0), 0, 0};
    gt.bbox.x_max = gt.bbox.x_min + rng.uniform(10.0, 300.0);
    gt.bbox.y_max = gt.bbox.y_min + rng.uniform(10.0, 150.0);
    gt.box.center = Eigen::Vector3d(rng.uniform(5.0, 50.0),
                                    rng.uniform(-15.0, 15.0),
                                    rng.uniform(-2.0, 0.5));
    gt.box.length = rng.uniform(0.5, 6.0);
    gt.box.height = rng.uniform(0.5, 3.0);
    gt.box.width = rng.uniform(0.5, 2.5);
    gt.box.yaw = rng.uniform(-3.0, 3.0);
    gt.alpha = kitti_alpha(internal_box_to_kitti(gt.box, calib.lidar_to_cam).ry,
                           internal_box_to_kitti(gt.box, calib.lidar_to_cam).x,
                           internal_box_to_kitti(gt.box, calib.lidar_to_cam).z);
    gts.push_back(gt);
  }

  const fs::path path = tmp.path / "label.txt";
  write_labels(gts, calib, path);
  const auto loaded = read_annotations(path, calib, {});
  REQUIRE(loaded.size() == gts.size());
  for (std::size_t i = 0; i < gts.size(); ++i) {
    CHECK(loaded[i].label == gts[i].label);
    CHECK(std::abs(loaded[i].truncation - gts[i].truncation) < 1e-4);
    CHECK(loaded[i].occlusion == gts[i].occlusion);
    CHECK(std::abs(loaded[i].bbox.x_min - gts[i].bbox.x_min) < 1e-4);
    CHECK(std::abs(loaded[i].bbox.y_max - gts[i].bbox.y_max) < 1e-4);
    CHECK((loaded[i].box.center - gts[i].box.center).norm() < 1e-3);
    CHECK(std::abs(loaded[i].box.length - gts[i].box.length) < 1e-4);
    CHECK(std::abs(loaded[i].box.height - gts[i].box.height) < 1e-4);
    CHECK(std::abs(loaded[i].box.width - gts[i].box.width) < 1e-4);
    CHECK(std::abs(wrap_angle(loaded[i].box.yaw - gts[i].box.yaw)) < 1e-3);
  }
}

TEST_CASE("results round-trip and carry scores") {
  TempDir tmp;
  const auto [raw, calib] = make_stereo_rig(SceneConfig{});
  Rng rng(16);

  std::vector<Detection3D> dets;
  for (int i = 0; i < 20; ++i) {
    Detection3D d;
    d.label = i % 2 ? "Car" : "Cyclist";
    d.score = rng.uniform(0.05, 1.0);
    d.id = i;
    d.box.center = Eigen::Vector3d(rng.uniform(8.0, 45.0),
                                   rng.uniform(-10.0, 10.0),
                                   rng.uniform(-1.8, 0.0));
    d.box.length = rng.uniform(0.5, 5.0);
    d.box.height = rng.uniform(0.5, 2.5);
    d.box.width = rng.uniform(0.5, 2.0);
    d.box.yaw = rng.uniform(-3.0, 3.0);
    dets.push_back(d);
  }

  const fs::path path = tmp.path / "result.txt";
  write_results(dets, calib, path);
  const auto loaded = read_detections_3d(path, LabelKind::Result, calib, {});
  REQUIRE(loaded.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(loaded[i].label == dets[i].label);
    CHECK(std::abs(loaded[i].score - dets[i].score) < 1e-4);
    CHECK((loaded[i].box.center - dets[i].box.center).norm() < 1e-3);
    CHECK(std::abs(wrap_angle(loaded[i].box.yaw - dets[i].box.yaw)) < 1e-3);
  }

  // Ground-truth readers refuse the 16-column shape.
  CHECK_THROWS_AS(read_detections_3d(path, LabelKind::GroundTruth, calib, {}),
                  DataError);
}

TEST_CASE("2d detection files keep box, label and score") {
  TempDir tmp;
  Rng rng(17);
  std::vector<Detection2D> dets;
  for (int i = 0; i < 20; ++i) {
    Detection2D d;
    d.label = i % 2 ? "Pedestrian" : "Car";
    d.score = rng.uniform(0.05, 1.0);
    d.box = Box2D{rng.uniform(0.0, 900.0), rng.uniform(0.0, 250.0), 0, 0};
    d.box.x_max = d.box.x_min + rng.uniform(5.0, 200.0);
    d.box.y_max = d.box.y_min + rng.uniform(5.0, 100.0);
    d.view = ViewId{0, CameraSide::Right};
    dets.push_back(d);
  }
  const fs::path path = tmp.path / "dets.txt";
  write_detections_2d(dets, path);

  const auto loaded = read_detections_2d(path, LabelKind::Result,
                                         ViewId{0, CameraSide::Right}, {});
  REQUIRE(loaded.size() == dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    CHECK(loaded[i].label == dets[i].label);
    CHECK(loaded[i].view.side == CameraSide::Right);
    CHECK(std::abs(loaded[i].score - dets[i].score) < 1e-4);
    CHECK(std::abs(loaded[i].box.x_min - dets[i].box.x_min) < 1e-4);
    CHECK(std::abs(loaded[i].box.y_min - dets[i].box.y_min) < 1e-4);
    CHECK(std::abs(loaded[i].box.x_max - dets[i].box.x_max) < 1e-4);
    CHECK(std::abs(loaded[i].box.y_max - dets[i].box.y_max) < 1e-4);
  }
}

TEST_CASE("class filtering honors the unknown-class policy") {
  TempDir tmp;
  const fs::path path = tmp.path / "mixed.txt";
  write_text(path,
             "Car 0.00 0 0.00 100.00 100.00 200.00 150.00 1.65 1.67 3.64 "
             "-0.65 1.71 46.70 -1.59\n"
             "Van 0.00 0 0.00 300.00 100.00 400.00 150.00 2.10 1.90 5.10 "
             "4.20 1.60 30.10 0.25\n");
  ReadOptions skip;
  skip.classes = {"Car", "Pedestrian", "Cyclist"};
  skip.unknown = UnknownClassPolicy::Skip;
  const auto kept =
      read_detections_2d(path, LabelKind::GroundTruth, ViewId{}, skip);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].label == "Car");

  ReadOptions strict = skip;
  strict.unknown = UnknownClassPolicy::Error;
  CHECK_THROWS_AS(
      read_detections_2d(path, LabelKind::GroundTruth, ViewId{}, strict),
      DataError);

  // An empty class list accepts everything.
  const auto all =
      read_detections_2d(path, LabelKind::GroundTruth, ViewId{}, {});
  CHECK(all.size() == 2);
}

TEST_CASE("boxes entirely behind the camera write the placeholder bbox") {
  TempDir tmp;
  const auto [raw, calib] = make_stereo_rig(SceneConfig{});
  Detection3D behind;
  behind.label = "Car";
  behind.score = 0.9;
  behind.box.center = Eigen::Vector3d(-20.0, 0.0, -1.0);  // behind the rig
  behind.box.length = 3.9;
  behind.box.height = 1.56;
  behind.box.width = 1.6;

  const fs::path path = tmp.path / "behind.txt";
  write_results({&behind, 1}, calib, path);

  std::ifstream in(path);
  std::string type;
  double trunc, occ, alpha, x1, y1, x2, y2;
  in >> type >> trunc >> occ >> alpha >> x1 >> y1 >> x2 >> y2;
  CHECK(type == "Car");
  CHECK(x1 == -1.0);
  CHECK(y1 == -1.0);
  CHECK(x2 == -1.0);
  CHECK(y2 == -1.0);
}

}  // TEST_SUITE
